#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aot/attention.hpp"

namespace aot {

/// Admissible threshold range (1/2, 1 / (1 + N exp(-9p/32))].
struct TauInterval {
  double lower = 0.5;
  double upper = 0.0;

  bool empty() const noexcept { return !(upper > lower); }
  bool contains(double tau) const noexcept { return tau > lower && tau <= upper; }
};

TauInterval theorem_tau_interval(std::size_t n_tokens, std::size_t p);

/// Outcome of unrolling thresholded attention on a sampled batch.
///
/// Ratios are only asserted on layers whose attention matched the block
/// pattern in every head; the closed form is compared at every layer of the
/// leading run of pattern-true layers.
struct TheoremReport {
  DenoiseTrace trace;
  bool pass = false;
  std::size_t layers_held = 0;
  /// Length of the leading run of layers whose pattern held.
  std::size_t held_prefix = 0;
  bool all_layers_held = false;
  /// layers_held / L (1 for L = 0).
  double pattern_frequency = 1.0;
  /// max |SNR_{l+1} / SNR_l / (1 + eta tau) - 1| over pattern-true layers.
  double max_ratio_error = 0.0;
  /// ||Z^(l) - closed form||_F / ||Z^(l)||_F maximized over the held prefix.
  double prefix_closed_form_error = 0.0;
  /// Same at l = L; NaN unless every layer held.
  double final_closed_form_error = 0.0;
};

inline constexpr double kRatioTolerance = 1e-9;
inline constexpr double kClosedFormTolerance = 1e-8;

/// Throws ParameterError (message carries the interval) when tau is outside
/// the admissible range for (N, p) or that range is empty.
TheoremReport verify_theorem(const SubspaceModel& model, const TokenBatch& batch,
                             std::size_t layers, double eta, double tau);

struct TheoremSweep {
  std::vector<std::uint64_t> seeds;
  std::vector<TheoremReport> runs;
  bool pass = false;
  /// Fraction of (seed, layer) pairs where every head matched the pattern.
  double pattern_frequency = 0.0;
  std::size_t seeds_all_held = 0;
  double max_ratio_error = 0.0;
  double max_prefix_closed_form_error = 0.0;
};

/// One run per seed: bases from sample_bases(.., seed) and tokens from
/// `mixture` with its seed replaced. Results are merged in seed order.
TheoremSweep verify_theorem_sweep(GaussianMixtureConfig mixture, std::size_t layers, double eta,
                                  double tau, std::span<const std::uint64_t> seeds);

}  // namespace aot
