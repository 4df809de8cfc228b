#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "aot/linalg.hpp"
#include "aot/rng.hpp"

namespace aot {

/// K subspaces of equal dimension p in R^d whose stacked basis [U_1 ... U_K]
/// has orthonormal columns.
class SubspaceModel {
public:
  static constexpr double kJointTolerance = 1e-9;

  SubspaceModel() = default;
  /// Throws DimensionError on unequal shapes and DegenerateInputError when the
  /// stacked basis is not orthonormal within kJointTolerance.
  explicit SubspaceModel(std::vector<OrthonormalBasis> bases);

  std::size_t d() const noexcept { return d_; }
  std::size_t K() const noexcept { return bases_.size(); }
  std::size_t p() const noexcept { return p_; }

  const OrthonormalBasis& basis(std::size_t k) const { return bases_.at(k); }
  const std::vector<OrthonormalBasis>& bases() const noexcept { return bases_; }
  std::vector<Matrix> basis_matrices() const;
  /// [U_1 ... U_K], d x Kp.
  Matrix stacked() const;

private:
  std::size_t d_ = 0;
  std::size_t p_ = 0;
  std::vector<OrthonormalBasis> bases_;
};

/// Orthonormalizes a d x Kp standard Gaussian matrix (drawn column by column
/// from Rng(seed, 0)) and splits it into K blocks of p columns.
SubspaceModel sample_bases(std::size_t d, std::size_t K, std::size_t p, std::uint64_t seed);

struct GaussianMixtureConfig {
  std::size_t d = 0;
  std::size_t K = 0;
  std::size_t p = 0;
  std::size_t tokens_per_cluster = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;

  std::size_t N() const noexcept { return K * tokens_per_cluster; }
  void validate() const;
};

struct ColumnRange {
  std::size_t begin = 0;
  std::size_t count = 0;
};

/// Latent factors of a sampled batch: signal[k] = A_k (p x N_k) and
/// noise[k][j] = E_{k,j} (p x N_k) for j != k; noise[k][k] is left empty.
struct Latents {
  std::vector<Matrix> signal;
  std::vector<std::vector<Matrix>> noise;
};

/// Tokens as columns of z, grouped so that each cluster is contiguous.
struct TokenBatch {
  Matrix z;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> cluster_sizes;
  std::optional<Latents> latents;

  std::size_t clusters() const noexcept { return cluster_sizes.size(); }
  ColumnRange cluster(std::size_t k) const;
  std::vector<ColumnRange> cluster_ranges() const;
};

/// Draws A_k ~ N(0, I) and E_{k,j} ~ N(0, delta^2 I). Draw order: clusters
/// outer, tokens inner; per token the p signal coordinates come first, then
/// the noise block of each j != k in increasing j.
Latents sample_latents(std::size_t K, std::size_t p, std::size_t tokens_per_cluster,
                       double delta, Rng& rng);

/// Samples latents from Rng(cfg.seed, 1) and assembles Z.
TokenBatch sample_tokens(const SubspaceModel& model, const GaussianMixtureConfig& cfg);

/// Cluster k columns: signal_scale * U_k A_k + sum_{j != k} U_j E_{k,j}.
Matrix assemble_tokens(const SubspaceModel& model, const Latents& latents,
                       double signal_scale = 1.0);

/// U U^T z
Matrix project(const Matrix& basis, const Matrix& z);
Matrix project(const OrthonormalBasis& basis, const Matrix& z);

/// Analytic layer-l state when every layer keeps the block-diagonal attention
/// pattern: the signal grows by (1 + eta * tau)^l and the noise is untouched.
/// Throws OracleUnavailableError if the batch carries no latents.
Matrix closed_form_state(const TokenBatch& batch, const SubspaceModel& model, std::size_t layer,
                         double eta, double tau);

}  // namespace aot
