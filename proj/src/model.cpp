#include "aot/model.hpp"

#include <cmath>
#include <string>

namespace aot {

SubspaceModel::SubspaceModel(std::vector<OrthonormalBasis> bases) : bases_(std::move(bases)) {
  if (bases_.empty()) throw DimensionError("SubspaceModel: need at least one basis");
  d_ = bases_.front().dim();
  p_ = bases_.front().rank();
  for (const auto& b : bases_) {
    if (b.dim() != d_ || b.rank() != p_) {
      throw DimensionError("SubspaceModel: all bases must be " + std::to_string(d_) + "x" +
                           std::to_string(p_));
    }
  }
  if (d_ < K() * p_) {
    throw DimensionError("SubspaceModel: d < K*p (" + std::to_string(d_) + " < " +
                         std::to_string(K() * p_) + ")");
  }
  const double r = orthonormality_residual(stacked());
  if (!(r <= kJointTolerance)) {
    throw DegenerateInputError("SubspaceModel: bases are not jointly orthonormal (residual " +
                               std::to_string(r) + ")");
  }
}

std::vector<Matrix> SubspaceModel::basis_matrices() const {
  std::vector<Matrix> out;
  out.reserve(bases_.size());
  for (const auto& b : bases_) out.push_back(b.matrix());
  return out;
}

Matrix SubspaceModel::stacked() const {
  Matrix s(d_, K() * p_);
  for (std::size_t k = 0; k < K(); ++k) s.set_columns(k * p_, bases_[k].matrix());
  return s;
}

SubspaceModel sample_bases(std::size_t d, std::size_t K, std::size_t p, std::uint64_t seed) {
  if (K == 0 || p == 0) throw ParameterError("sample_bases: K and p must be positive");
  if (d < K * p) {
    throw ParameterError("sample_bases: d must be >= K*p (d=" + std::to_string(d) +
                         ", K*p=" + std::to_string(K * p) + ")");
  }
  Rng rng(seed, 0);
  Matrix g(d, K * p);
  for (std::size_t j = 0; j < K * p; ++j)
    for (std::size_t i = 0; i < d; ++i) g(i, j) = rng.normal();
  const Matrix q = orthonormalize(g).matrix();
  std::vector<OrthonormalBasis> bases;
  bases.reserve(K);
  for (std::size_t k = 0; k < K; ++k) bases.emplace_back(q.columns(k * p, p));
  return SubspaceModel(std::move(bases));
}

void GaussianMixtureConfig::validate() const {
  if (K == 0 || p == 0) throw ParameterError("mixture config: K and p must be positive");
  if (tokens_per_cluster == 0) throw ParameterError("mixture config: tokens_per_cluster >= 1");
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ParameterError("mixture config: delta must be finite and >= 0");
  }
  if (d < K * p) throw ParameterError("mixture config: d must be >= K*p");
}

ColumnRange TokenBatch::cluster(std::size_t k) const {
  if (k >= cluster_sizes.size()) throw DimensionError("TokenBatch: cluster index out of range");
  std::size_t begin = 0;
  for (std::size_t j = 0; j < k; ++j) begin += cluster_sizes[j];
  return {begin, cluster_sizes[k]};
}

std::vector<ColumnRange> TokenBatch::cluster_ranges() const {
  std::vector<ColumnRange> out;
  std::size_t begin = 0;
  for (std::size_t n : cluster_sizes) {
    out.push_back({begin, n});
    begin += n;
  }
  return out;
}

Latents sample_latents(std::size_t K, std::size_t p, std::size_t tokens_per_cluster,
                       double delta, Rng& rng) {
  Latents lat;
  lat.signal.assign(K, Matrix(p, tokens_per_cluster));
  lat.noise.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    lat.noise[k].resize(K);
    for (std::size_t j = 0; j < K; ++j)
      if (j != k) lat.noise[k][j] = Matrix(p, tokens_per_cluster);
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t t = 0; t < tokens_per_cluster; ++t) {
      for (std::size_t r = 0; r < p; ++r) lat.signal[k](r, t) = rng.normal();
      for (std::size_t j = 0; j < K; ++j) {
        if (j == k) continue;
        for (std::size_t r = 0; r < p; ++r) lat.noise[k][j](r, t) = delta * rng.normal();
      }
    }
  }
  return lat;
}

Matrix assemble_tokens(const SubspaceModel& model, const Latents& latents, double signal_scale) {
  const std::size_t K = model.K();
  if (latents.signal.size() != K || latents.noise.size() != K) {
    throw DimensionError("assemble_tokens: latents do not match model");
  }
  std::size_t n = 0;
  for (const auto& a : latents.signal) n += a.cols();
  Matrix z(model.d(), n);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < K; ++k) {
    Matrix zk = matmul(model.basis(k).matrix(), latents.signal[k]);
    if (signal_scale != 1.0) zk *= signal_scale;
    for (std::size_t j = 0; j < K; ++j) {
      if (j == k) continue;
      zk += matmul(model.basis(j).matrix(), latents.noise[k][j]);
    }
    z.set_columns(offset, zk);
    offset += zk.cols();
  }
  return z;
}

TokenBatch sample_tokens(const SubspaceModel& model, const GaussianMixtureConfig& cfg) {
  cfg.validate();
  if (cfg.d != model.d() || cfg.K != model.K() || cfg.p != model.p()) {
    throw DimensionError("sample_tokens: config dims do not match the model");
  }
  Rng rng(cfg.seed, 1);
  TokenBatch batch;
  batch.latents = sample_latents(cfg.K, cfg.p, cfg.tokens_per_cluster, cfg.delta, rng);
  batch.z = assemble_tokens(model, *batch.latents);
  batch.cluster_sizes.assign(cfg.K, cfg.tokens_per_cluster);
  batch.labels.reserve(cfg.N());
  for (std::size_t k = 0; k < cfg.K; ++k) batch.labels.insert(batch.labels.end(), cfg.tokens_per_cluster, k);
  return batch;
}

Matrix project(const Matrix& basis, const Matrix& z) {
  if (basis.rows() != z.rows()) {
    throw DimensionError("project: basis has " + std::to_string(basis.rows()) +
                         " rows, tokens have " + std::to_string(z.rows()));
  }
  return matmul(basis, matmul_tn(basis, z));
}

Matrix project(const OrthonormalBasis& basis, const Matrix& z) { return project(basis.matrix(), z); }

Matrix closed_form_state(const TokenBatch& batch, const SubspaceModel& model, std::size_t layer,
                         double eta, double tau) {
  if (!batch.latents) throw OracleUnavailableError("closed_form_state: batch has no latents");
  const double scale = std::pow(1.0 + eta * tau, static_cast<double>(layer));
  return assemble_tokens(model, *batch.latents, scale);
}

}  // namespace aot
