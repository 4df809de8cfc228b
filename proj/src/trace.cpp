#include "aot/trace.hpp"

#include <cmath>

namespace aot {

double snr(const Matrix& basis, const Matrix& z, ColumnRange cluster) {
  if (cluster.count == 0) throw ParameterError("snr: empty cluster");
  if (basis.rows() != z.rows()) throw DimensionError("snr: basis and tokens differ in dimension");
  if (cluster.begin + cluster.count > z.cols()) throw DimensionError("snr: cluster out of range");
  const Matrix zk = z.columns(cluster.begin, cluster.count);
  const Matrix signal = project(basis, zk);
  const double num = frobenius_norm(signal);
  const double den = frobenius_norm(zk - signal);
  if (!std::isfinite(num) || !std::isfinite(den)) throw NumericError("snr: non-finite tokens");
  if (num < 1e-300 && den < 1e-300) throw DegenerateInputError("snr: all-zero cluster");
  if (den < 1e-14 * num) return kInfiniteSnr;
  return num / den;
}

std::vector<double> cluster_snr(const SubspaceModel& model, const Matrix& z,
                                const std::vector<ColumnRange>& clusters) {
  if (clusters.size() != model.K()) throw DimensionError("cluster_snr: cluster count != K");
  std::vector<double> out;
  out.reserve(clusters.size());
  for (std::size_t k = 0; k < clusters.size(); ++k)
    out.push_back(snr(model.basis(k).matrix(), z, clusters[k]));
  return out;
}

double DenoiseTrace::mean_snr(std::size_t layer) const {
  const auto& row = snr.at(layer);
  double s = 0.0;
  for (double v : row) s += v;
  return s / static_cast<double>(row.size());
}

}  // namespace aot
