#include "aot/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aot/attention.hpp"
#include "aot/error.hpp"
#include "aot/kernels.hpp"

namespace aot {

double binomial_slack(double f, std::size_t trials) {
  if (trials == 0) return 0.0;
  const double c = std::clamp(f, 0.0, 1.0);
  return 3.0 * std::sqrt(c * (1.0 - c) / static_cast<double>(trials));
}

const InequalityResult& LemmaReport::at(const std::string& name) const {
  for (const auto& r : results)
    if (r.name == name) return r;
  throw std::out_of_range("LemmaReport: no result named " + name);
}

namespace {

InequalityResult tally(std::string name, std::size_t trials, std::size_t satisfied, double floor) {
  InequalityResult r;
  r.name = std::move(name);
  r.trials = trials;
  r.satisfied = satisfied;
  r.frequency = trials == 0 ? 0.0 : static_cast<double>(satisfied) / static_cast<double>(trials);
  r.floor = floor;
  r.slack = binomial_slack(floor, trials);
  r.meets_floor = r.frequency >= floor - r.slack;
  return r;
}

double column_norm(const Matrix& m, std::size_t j) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

// Largest softmax weight of x restricted to [begin, end) minus an optional
// excluded index.
double max_softmax(const double* x, std::size_t begin, std::size_t end, std::size_t skip) {
  double mx = -HUGE_VAL;
  for (std::size_t i = begin; i < end; ++i)
    if (i != skip) mx = std::max(mx, x[i]);
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i)
    if (i != skip) sum += std::exp(x[i] - mx);
  return 1.0 / sum;
}

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

constexpr const char* kA2Names[8] = {"signal_norm",        "noise_norm",
                                     "signal_inner",       "signal_noise_inner",
                                     "noise_inner",        "signal_noise_max",
                                     "signal_noise_softmax", "noise_softmax"};

// Which of the eight inequalities held on one latent draw.
struct A2Outcome {
  bool held[8] = {true, true, true, true, true, true, true, true};
};

A2Outcome evaluate_a2(const Latents& lat, std::size_t K, std::size_t nk, double p, double delta,
                      double log_n) {
  A2Outcome out;
  const double root = std::sqrt(log_n);
  const double norm_bound = 2.0 * (root + 1.0);

  // signal norms, in-cluster signal inner products
  for (std::size_t k = 0; k < K; ++k) {
    const Matrix g = kernels::parallel::gram(lat.signal[k]);
    for (std::size_t i = 0; i < nk; ++i) {
      const double ni = std::sqrt(g(i, i));
      if (std::abs(ni - std::sqrt(p)) > norm_bound) out.held[0] = false;
      for (std::size_t j = 0; j < nk; ++j)
        if (j != i && std::abs(g(i, j)) > 3.0 * root * ni) out.held[2] = false;
    }
  }

  for (std::size_t k = 0; k < K; ++k) {
    // F_k stacks e_{j,k} for every token j outside C_k, in cluster order.
    const std::size_t others = (K - 1) * nk;
    Matrix f(lat.signal[k].rows(), others);
    std::vector<std::size_t> owner(others);
    for (std::size_t l = 0, c = 0; l < K; ++l) {
      if (l == k) continue;
      f.set_columns(c * nk, lat.noise[l][k]);
      for (std::size_t j = 0; j < nk; ++j) owner[c * nk + j] = l;
      ++c;
    }
    std::vector<double> enorm(others);
    for (std::size_t j = 0; j < others; ++j) {
      enorm[j] = column_norm(f, j);
      // noise norms
      if (std::abs(enorm[j] - delta * std::sqrt(p)) > delta * norm_bound) out.held[1] = false;
    }

    // cross[j][i] = <a_i, e_{j,k}>, i in C_k
    const Matrix cross = kernels::parallel::gemm_tn(f, lat.signal[k]);
    for (std::size_t j = 0; j < others; ++j) {
      const double* x = cross.row(j).data();
      double mx = -HUGE_VAL;
      for (std::size_t i = 0; i < nk; ++i) {
        // signal-noise inner products
        if (std::abs(x[i]) > 3.0 * root * enorm[j]) out.held[3] = false;
        mx = std::max(mx, x[i]);
      }
      // largest signal-noise inner product
      if (mx < root * enorm[j]) out.held[5] = false;
      // softmax over own-cluster signals
      if (max_softmax(x, 0, nk, kNone) > 0.5) out.held[6] = false;
    }

    const Matrix g = kernels::parallel::gram(f);
    for (std::size_t j = 0; j < others; ++j) {
      const double* x = g.row(j).data();
      // noise-noise inner products
      for (std::size_t i = 0; i < others; ++i)
        if (i != j && std::abs(x[i]) > 3.0 * delta * root * enorm[j]) out.held[4] = false;
      // softmax over other clusters: normalize over each other-cluster block C_l, excluding j itself.
      for (std::size_t b = 0; b + 1 < K; ++b) {
        const std::size_t begin = b * nk, end = begin + nk;
        const bool own = j >= begin && j < end;
        if (own && nk == 1) continue;
        if (max_softmax(x, begin, end, own ? j : kNone) > 0.5) out.held[7] = false;
      }
    }
  }
  return out;
}

}  // namespace

LemmaReport check_lemma_a1(std::size_t d, double delta, double t, std::size_t trials,
                           std::uint64_t seed) {
  if (d == 0) throw ParameterError("check_lemma_a1: d must be positive");
  if (!(delta >= 0.0) || !(t >= 0.0)) throw ParameterError("check_lemma_a1: delta and t must be >= 0");
  Rng rng(seed, 0);
  const double center = delta * std::sqrt(static_cast<double>(d));
  std::size_t satisfied = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double x = delta * rng.normal();
      s += x * x;
    }
    if (std::abs(std::sqrt(s) - center) <= t + 2.0 * delta) ++satisfied;
  }
  double floor;
  if (delta > 0.0) floor = 1.0 - 2.0 * std::exp(-t * t / (2.0 * delta * delta));
  else floor = t > 0.0 ? 1.0 : -1.0;

  LemmaReport report;
  report.lemma = "A1";
  report.d = d;
  report.delta = delta;
  report.t = t;
  report.results.push_back(tally("norm_concentration", trials, satisfied, floor));
  return report;
}

LemmaReport check_lemma_a2(const GaussianMixtureConfig& cfg, std::size_t trials,
                           std::uint64_t seed, double log_base) {
  if (cfg.K == 0 || cfg.p == 0 || cfg.tokens_per_cluster == 0) {
    throw ParameterError("check_lemma_a2: K, p and tokens_per_cluster must be positive");
  }
  if (!(cfg.delta >= 0.0)) throw ParameterError("check_lemma_a2: delta must be >= 0");
  if (!(log_base > 1.0)) throw ParameterError("check_lemma_a2: log base must exceed 1");

  const std::size_t K = cfg.K, nk = cfg.tokens_per_cluster;
  const double N = static_cast<double>(cfg.N());
  const double p = static_cast<double>(cfg.p);
  const double log_n = std::log(N) / std::log(log_base);

  std::size_t counts[8] = {};
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(seed, trial);
    const Latents lat = sample_latents(K, cfg.p, nk, cfg.delta, rng);
    const A2Outcome o = evaluate_a2(lat, K, nk, p, cfg.delta, log_n);
    for (int e = 0; e < 8; ++e) counts[e] += o.held[e] ? 1 : 0;
  }

  const double kd = static_cast<double>(K);
  const double floors[8] = {
      1.0 - 2.0 / N,             1.0 - 2.0 * (kd - 1.0) / N, 1.0 - 4.0 * kd / (N * N),
      1.0 - 4.0 * kd / (N * N),  1.0 - 4.0 * kd / (N * N),   1.0 - 2.0 / N,
      1.0 - 4.0 * kd / N,        1.0 - 4.0 * kd / N,
  };
  LemmaReport report;
  report.lemma = "A2";
  report.N = cfg.N();
  report.K = K;
  report.p = cfg.p;
  report.d = cfg.d;
  report.delta = cfg.delta;
  report.log_base = log_base;
  for (int e = 0; e < 8; ++e)
    report.results.push_back(tally(kA2Names[e], trials, counts[e], floors[e]));

  const double r = std::sqrt(log_n) + 1.0;
  report.conditions = {
      {"p >= 16 (sqrt(log N) + 1)^2", p >= 16.0 * r * r},
      {"delta <= sqrt(log N / p) / 8", cfg.delta <= std::sqrt(log_n / p) / 8.0},
      {"N >= 8 pi K^2 log^3 N", N >= 8.0 * std::numbers::pi * kd * kd * log_n * log_n * log_n},
  };
  return report;
}

namespace {

std::vector<bool> a3_heads(const SubspaceModel& model, const TokenBatch& batch, double theta,
                           double tau) {
  if (!batch.latents) throw OracleUnavailableError("check_lemma_a3: batch has no latents");
  if (!(theta >= 1.0)) throw ParameterError("check_lemma_a3: theta must be >= 1");
  if (batch.clusters() != model.K()) {
    throw DimensionError("check_lemma_a3: batch and model disagree on the number of clusters");
  }
  AttentionConfig cfg;
  cfg.phi = Phi::threshold(tau);
  cfg.validate();

  const Matrix z = assemble_tokens(model, *batch.latents, theta);
  std::vector<bool> held(model.K());
  for (std::size_t k = 0; k < model.K(); ++k) {
    const Matrix proj = matmul_tn(model.basis(k).matrix(), z);
    const Matrix w = attention_weights(kernels::parallel::gram(proj), cfg);
    held[k] = block_pattern_match(w, batch.cluster_sizes, k, tau);
  }
  return held;
}

LemmaReport a3_report(const std::vector<std::size_t>& counts, std::size_t all, std::size_t trials,
                      std::size_t N, std::size_t K, std::size_t p, std::size_t d, double theta,
                      double tau) {
  LemmaReport report;
  report.lemma = "A3";
  report.N = N;
  report.K = K;
  report.p = p;
  report.d = d;
  report.theta = theta;
  report.tau = tau;
  // The probability bound carries an unspecified exponent, so no floor is asserted.
  for (std::size_t k = 0; k < K; ++k)
    report.results.push_back(tally("head" + std::to_string(k), trials, counts[k], 0.0));
  report.results.push_back(tally("all_heads", trials, all, 0.0));
  return report;
}

}  // namespace

LemmaReport check_lemma_a3(const SubspaceModel& model, const TokenBatch& batch, double theta,
                           double tau) {
  const auto held = a3_heads(model, batch, theta, tau);
  std::vector<std::size_t> counts(held.begin(), held.end());
  const bool all = std::all_of(held.begin(), held.end(), [](bool b) { return b; });
  return a3_report(counts, all ? 1 : 0, 1, batch.z.cols(), model.K(), model.p(), model.d(), theta,
                   tau);
}

LemmaReport check_lemma_a3_sweep(GaussianMixtureConfig mixture, double theta, double tau,
                                 std::span<const std::uint64_t> seeds) {
  mixture.validate();
  std::vector<std::size_t> counts(mixture.K, 0);
  std::size_t all = 0;
  for (std::uint64_t seed : seeds) {
    mixture.seed = seed;
    const SubspaceModel model = sample_bases(mixture.d, mixture.K, mixture.p, seed);
    const TokenBatch batch = sample_tokens(model, mixture);
    const auto held = a3_heads(model, batch, theta, tau);
    bool every = true;
    for (std::size_t k = 0; k < held.size(); ++k) {
      counts[k] += held[k] ? 1 : 0;
      every = every && held[k];
    }
    all += every ? 1 : 0;
  }
  LemmaReport report = a3_report(counts, all, seeds.size(), mixture.N(), mixture.K, mixture.p,
                                 mixture.d, theta, tau);
  report.delta = mixture.delta;
  return report;
}

}  // namespace aot
