#pragma once

// Monte Carlo checks of the concentration and attention-pattern lemmas behind
// the SNR recursion. Each checker reports, per inequality, how often it held
// across independent trials next to its theoretical probability floor.

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "aot/model.hpp"

namespace aot {

/// 3 sqrt(f (1 - f) / trials), with f clamped to [0, 1].
double binomial_slack(double f, std::size_t trials);

struct InequalityResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t satisfied = 0;
  double frequency = 0.0;
  double floor = 0.0;  ///< may be negative (vacuous)
  double slack = 0.0;
  /// frequency >= floor - slack
  bool meets_floor = false;
};

struct RegimeCondition {
  std::string name;
  bool holds = false;
};

struct LemmaReport {
  std::string lemma;
  std::vector<InequalityResult> results;
  std::vector<RegimeCondition> conditions;
  // Parameter regime; unused fields stay zero.
  std::size_t N = 0, K = 0, p = 0, d = 0;
  double delta = 0.0, tau = 0.0, theta = 0.0, t = 0.0;
  double log_base = std::numbers::e;

  const InequalityResult& at(const std::string& name) const;
};

/// x ~ N(0, delta^2 I_d): | ||x|| - delta sqrt(d) | <= t + 2 delta, floor 1 - 2 exp(-t^2 / 2 delta^2).
LemmaReport check_lemma_a1(std::size_t d, double delta, double t, std::size_t trials,
                           std::uint64_t seed);

/// Norm, inner-product, max and softmax-ratio bounds on the latent factors,
/// reported as signal_norm, noise_norm, signal_inner, signal_noise_inner,
/// noise_inner, signal_noise_max, signal_noise_softmax, noise_softmax. Trial i draws from Rng(seed, i). `log_base`
/// selects the logarithm used for log N.
LemmaReport check_lemma_a2(const GaussianMixtureConfig& cfg, std::size_t trials,
                           std::uint64_t seed, double log_base = std::numbers::e);

/// Builds M_k = Z_theta^T U_k U_k^T Z_theta with the signal scaled by theta and
/// checks h(softmax(M_k)) against the block pattern; one result per head.
LemmaReport check_lemma_a3(const SubspaceModel& model, const TokenBatch& batch, double theta,
                           double tau);

/// check_lemma_a3 over independently sampled (model, batch) pairs, one per seed.
LemmaReport check_lemma_a3_sweep(GaussianMixtureConfig mixture, double theta, double tau,
                                 std::span<const std::uint64_t> seeds);

}  // namespace aot
