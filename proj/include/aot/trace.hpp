#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "aot/model.hpp"

namespace aot {

/// Returned by snr() when the off-subspace energy is negligible.
inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

/// ||U U^T Z_k||_F / ||(I - U U^T) Z_k||_F over the columns in `cluster`.
///
/// Returns kInfiniteSnr when the denominator is below 1e-14 times the
/// numerator. Throws ParameterError for an empty cluster and
/// DegenerateInputError when both norms are below 1e-300.
double snr(const Matrix& basis, const Matrix& z, ColumnRange cluster);

/// Per-cluster SNR of `z` against the reference model.
std::vector<double> cluster_snr(const SubspaceModel& model, const Matrix& z,
                                const std::vector<ColumnRange>& clusters);

struct TraceParams {
  double eta = 0.0;
  std::string phi = "softmax";  ///< "softmax" or "threshold"
  double tau = 0.0;             ///< only meaningful for "threshold"
  double temperature = 1.0;
  bool causal = false;
  bool prenorm = false;
  double delta = 0.0;
  std::size_t d = 0, K = 0, p = 0, N = 0;
  std::uint64_t seed = 0;
};

/// SNR per layer (rows 0..L, row 0 is the input) and cluster, plus the
/// per-layer flag telling whether every head produced the block-diagonal
/// attention pattern (thresholded attention only; empty otherwise).
struct DenoiseTrace {
  TraceParams params;
  std::vector<std::vector<double>> snr;
  std::vector<bool> pattern;

  std::size_t layers() const noexcept { return snr.empty() ? 0 : snr.size() - 1; }
  double mean_snr(std::size_t layer) const;
};

}  // namespace aot
