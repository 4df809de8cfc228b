#pragma once

// Reverse-mode gradients of the softmax MSSA layer and a small gradient
// descent loop over layerwise bases.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aot/attention.hpp"

namespace aot {

/// Everything mssa_backward needs from one forward pass.
struct MssaCache {
  std::vector<Matrix> bases;
  Matrix z;
  std::vector<Matrix> proj;     ///< P_k = U_k^T z
  std::vector<Matrix> weights;  ///< S_k = softmax(P_k^T P_k / T)
  double eta = 0.0;
  double temperature = 1.0;
};

struct CachedForward {
  Matrix output;
  MssaCache cache;
};

/// output = z + eta * MSSA(z) with softmax phi, computed in the same order as
/// attention_layer so the two agree bit for bit.
CachedForward mssa_forward_cached(std::span<const Matrix> bases, const Matrix& z, double eta,
                                  double temperature = 1.0);

struct LayerGradients {
  Matrix d_z;
  std::vector<Matrix> d_bases;
};

/// Gradients of <upstream, output> with respect to the layer input and bases.
LayerGradients mssa_backward(const MssaCache& cache, const Matrix& upstream);

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t probes = 0;
  /// True when nothing was probed (error reported as 0).
  bool degenerate = false;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;
/// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradcheckFloor = 1e-6;

/// Central differences of 0.5 ||output||_F^2 on `probes` random coordinates
/// of z and of each basis, against mssa_backward.
GradcheckResult finite_diff_gradcheck(std::span<const Matrix> bases, const Matrix& z, double eta,
                                      std::size_t probes, std::uint64_t seed = 0,
                                      double temperature = 1.0);

/// lambda ||U^T U - I||_F^2 and its gradient 4 lambda U (U^T U - I).
double orthonormality_penalty(const Matrix& u, double lambda);
Matrix orthonormality_penalty_gradient(const Matrix& u, double lambda);

enum class Optimizer { GradientDescent, Momentum };

enum class TrainLoss {
  /// 0.5 ||Z^(L) - Z*||_F^2 / N against the clean signal U_k A_k.
  Mse,
  /// -(1/K) sum_k log SNR(Z_k^(L)) measured against the reference subspaces.
  NegLogSnr,
};

struct TrainConfig {
  std::size_t steps = 500;
  double learning_rate = 1e-2;
  Optimizer optimizer = Optimizer::GradientDescent;
  double momentum = 0.9;
  TrainLoss loss = TrainLoss::Mse;
  std::size_t layers = 1;
  double eta = 1.0;
  double temperature = 1.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  /// Optional; must be "softmax" if set. Anything else is rejected.
  std::string phi = "softmax";

  void validate() const;
};

struct TrainStep {
  std::size_t step = 0;
  double loss = 0.0;
  double mean_final_snr = 0.0;
};

struct TrainLog {
  std::vector<TrainStep> steps;
  /// Loss and final SNR after the last update, on batch 0.
  double final_loss = 0.0;
  double final_mean_snr = 0.0;
  double initial_mean_snr = 0.0;
  /// ||U_k^T U_k - I||_F per layer and head after training.
  std::vector<std::vector<double>> orthonormality;
};

std::string to_string(TrainLoss loss);
TrainLoss parse_train_loss(const std::string& name);
std::string to_string(Optimizer opt);
Optimizer parse_optimizer(const std::string& name);

/// Untied stack of L layers, each with K bases of i.i.d. N(0, scale^2 / d)
/// entries drawn from Rng(seed, 2).
LayerStack random_stack(std::size_t d, std::size_t K, std::size_t p, std::size_t layers,
                        double scale, std::uint64_t seed);

/// Mean over clusters of SNR at every layer (L + 1 entries) for a softmax
/// unroll of `stack`.
std::vector<double> mean_snr_profile(const LayerStack& stack, const SubspaceModel& truth,
                                     const TokenBatch& batch, double eta, double temperature);

/// Step t uses batches[t % size]. Throws ParameterError for tied stacks,
/// non-softmax phi or batches without latents, and NumericError carrying the
/// step index when the loss diverges.
TrainLog train(LayerStack& stack, const SubspaceModel& truth, std::span<const TokenBatch> batches,
               const TrainConfig& cfg);

}  // namespace aot
