#include "aot/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace aot {

TauInterval theorem_tau_interval(std::size_t n_tokens, std::size_t p) {
  const double n = static_cast<double>(n_tokens);
  return {0.5, 1.0 / (1.0 + n * std::exp(-9.0 * static_cast<double>(p) / 32.0))};
}

namespace {

double ratio_error(double before, double after, double rate) {
  if (std::isinf(before) && std::isinf(after)) return 0.0;
  return std::abs(after / before / rate - 1.0);
}

double relative_error(const Matrix& actual, const Matrix& expected) {
  const double den = frobenius_norm(actual);
  const double num = frobenius_norm(actual - expected);
  return den > 0.0 ? num / den : num;
}

}  // namespace

TheoremReport verify_theorem(const SubspaceModel& model, const TokenBatch& batch,
                             std::size_t layers, double eta, double tau) {
  const TauInterval interval = theorem_tau_interval(batch.z.cols(), model.p());
  if (interval.empty() || !interval.contains(tau)) {
    throw ParameterError("verify_theorem: tau=" + std::to_string(tau) +
                         " outside admissible interval (" + std::to_string(interval.lower) + ", " +
                         std::to_string(interval.upper) + "]");
  }
  if (!batch.latents) throw OracleUnavailableError("verify_theorem: batch has no latents");

  AttentionConfig cfg;
  cfg.eta = eta;
  cfg.phi = Phi::threshold(tau);

  TheoremReport report;
  auto& trace = report.trace;
  trace.params.eta = eta;
  trace.params.phi = "threshold";
  trace.params.tau = tau;
  trace.params.d = model.d();
  trace.params.K = model.K();
  trace.params.p = model.p();
  trace.params.N = batch.z.cols();

  const auto clusters = batch.cluster_ranges();
  const auto bases = model.basis_matrices();
  const double rate = 1.0 + eta * tau;

  Matrix z = batch.z;
  trace.snr.push_back(cluster_snr(model, z, clusters));
  bool prefix = true;
  for (std::size_t l = 0; l < layers; ++l) {
    bool held = false;
    try {
      z = attention_layer(bases, z, cfg, &clusters, &held);
    } catch (const NumericError& e) {
      throw NumericError(e.what(), static_cast<std::ptrdiff_t>(l));
    }
    trace.pattern.push_back(held);
    trace.snr.push_back(cluster_snr(model, z, clusters));
    if (held) {
      ++report.layers_held;
      const auto& before = trace.snr[l];
      const auto& after = trace.snr[l + 1];
      for (std::size_t k = 0; k < before.size(); ++k)
        report.max_ratio_error = std::max(report.max_ratio_error, ratio_error(before[k], after[k], rate));
    }
    prefix = prefix && held;
    if (prefix) {
      report.held_prefix = l + 1;
      report.prefix_closed_form_error =
          std::max(report.prefix_closed_form_error,
                   relative_error(z, closed_form_state(batch, model, l + 1, eta, tau)));
    }
  }

  report.all_layers_held = report.layers_held == layers;
  report.pattern_frequency =
      layers == 0 ? 1.0 : static_cast<double>(report.layers_held) / static_cast<double>(layers);
  report.final_closed_form_error = report.all_layers_held
                                       ? relative_error(z, closed_form_state(batch, model, layers, eta, tau))
                                       : std::numeric_limits<double>::quiet_NaN();
  report.pass = report.max_ratio_error <= kRatioTolerance &&
                report.prefix_closed_form_error <= kClosedFormTolerance &&
                (!report.all_layers_held || report.final_closed_form_error <= kClosedFormTolerance);
  return report;
}

TheoremSweep verify_theorem_sweep(GaussianMixtureConfig mixture, std::size_t layers, double eta,
                                  double tau, std::span<const std::uint64_t> seeds) {
  TheoremSweep sweep;
  sweep.seeds.assign(seeds.begin(), seeds.end());
  sweep.pass = true;
  std::size_t held = 0;
  for (std::uint64_t seed : seeds) {
    mixture.seed = seed;
    const SubspaceModel model = sample_bases(mixture.d, mixture.K, mixture.p, seed);
    const TokenBatch batch = sample_tokens(model, mixture);
    TheoremReport run = verify_theorem(model, batch, layers, eta, tau);
    run.trace.params.delta = mixture.delta;
    run.trace.params.seed = seed;
    held += run.layers_held;
    sweep.seeds_all_held += run.all_layers_held ? 1 : 0;
    sweep.pass = sweep.pass && run.pass;
    sweep.max_ratio_error = std::max(sweep.max_ratio_error, run.max_ratio_error);
    sweep.max_prefix_closed_form_error =
        std::max(sweep.max_prefix_closed_form_error, run.prefix_closed_form_error);
    sweep.runs.push_back(std::move(run));
  }
  const std::size_t total = layers * seeds.size();
  sweep.pattern_frequency = total == 0 ? 1.0 : static_cast<double>(held) / static_cast<double>(total);
  return sweep;
}

}  // namespace aot
