#include "aot/train.hpp"

#include <algorithm>
#include <cmath>

#include "aot/kernels.hpp"
#include "aot/trace.hpp"

namespace aot {

CachedForward mssa_forward_cached(std::span<const Matrix> bases, const Matrix& z, double eta,
                                  double temperature) {
  AttentionConfig cfg;
  cfg.eta = eta;
  cfg.temperature = temperature;
  cfg.validate();
  if (z.empty()) throw DimensionError("mssa_forward_cached: empty tokens");
  if (bases.empty()) throw DimensionError("mssa_forward_cached: no heads");
  for (const auto& u : bases) {
    if (u.rows() != z.rows() || u.cols() != bases.front().cols()) {
      throw DimensionError("mssa_forward_cached: basis shapes disagree with tokens");
    }
  }

  CachedForward f;
  f.cache.bases.assign(bases.begin(), bases.end());
  f.cache.z = z;
  f.cache.eta = eta;
  f.cache.temperature = temperature;
  Matrix sum(z.rows(), z.cols());
  for (const auto& u : bases) {
    Matrix proj = matmul_tn(u, z);
    Matrix weights = attention_weights(kernels::parallel::gram(proj), cfg);
    sum += matmul(u, matmul(proj, weights));
    f.cache.proj.push_back(std::move(proj));
    f.cache.weights.push_back(std::move(weights));
  }
  if (!sum.all_finite()) throw NumericError("mssa_forward_cached: non-finite output");
  f.output = layer_step(z, sum, eta);
  return f;
}

LayerGradients mssa_backward(const MssaCache& cache, const Matrix& upstream) {
  require_same_shape(cache.z, upstream, "mssa_backward");
  if (cache.proj.size() != cache.bases.size() || cache.weights.size() != cache.bases.size()) {
    throw DimensionError("mssa_backward: cache is incomplete");
  }
  const double eta = cache.eta;
  const double inv_t = 1.0 / cache.temperature;
  const std::size_t n = cache.z.cols();

  LayerGradients g;
  g.d_z = upstream;
  for (std::size_t k = 0; k < cache.bases.size(); ++k) {
    const Matrix& u = cache.bases[k];
    const Matrix& p = cache.proj[k];
    const Matrix& s = cache.weights[k];

    const Matrix y = matmul(p, s);
    Matrix d_u = matmul_nt(upstream, y);
    d_u *= eta;
    Matrix d_y = matmul_tn(u, upstream);
    d_y *= eta;

    Matrix d_p = matmul_nt(d_y, s);
    const Matrix d_s = matmul_tn(p, d_y);
    // Column softmax Jacobian: diag(s) - s s^T applied per column.
    std::vector<double> dot(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dot[j] += s(i, j) * d_s(i, j);
    Matrix d_a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d_a(i, j) = s(i, j) * (d_s(i, j) - dot[j]);
    Matrix sym = d_a + d_a.transposed();
    sym *= inv_t;
    d_p += matmul(p, sym);

    d_u += matmul_nt(cache.z, d_p);
    g.d_z += matmul(u, d_p);
    g.d_bases.push_back(std::move(d_u));
  }
  return g;
}

namespace {

double half_sq_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return 0.5 * s;
}

}  // namespace

GradcheckResult finite_diff_gradcheck(std::span<const Matrix> bases, const Matrix& z, double eta,
                                      std::size_t probes, std::uint64_t seed, double temperature) {
  GradcheckResult result;
  if (probes == 0) {
    result.degenerate = true;
    return result;
  }
  const CachedForward f = mssa_forward_cached(bases, z, eta, temperature);
  const LayerGradients g = mssa_backward(f.cache, f.output);

  std::vector<Matrix> params;
  params.push_back(z);
  params.insert(params.end(), bases.begin(), bases.end());
  auto loss = [&](const std::vector<Matrix>& x) {
    return half_sq_norm(
        mssa_forward_cached(std::span(x).subspan(1), x.front(), eta, temperature).output);
  };

  Rng rng(seed, 3);
  const double h = kFiniteDifferenceStep;
  for (std::size_t b = 0; b < params.size(); ++b) {
    const Matrix& analytic = b == 0 ? g.d_z : g.d_bases[b - 1];
    for (std::size_t probe = 0; probe < probes; ++probe) {
      const std::size_t idx = rng.below(params[b].size());
      double& x = params[b].data()[idx];
      const double x0 = x;
      x = x0 + h;
      const double up = loss(params);
      x = x0 - h;
      const double down = loss(params);
      x = x0;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[idx];
      const double den = std::max({std::abs(a), std::abs(numeric), kGradcheckFloor});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / den);
      ++result.probes;
    }
  }
  return result;
}

double orthonormality_penalty(const Matrix& u, double lambda) {
  Matrix r = kernels::parallel::gram(u) - Matrix::identity(u.cols());
  return lambda * 2.0 * half_sq_norm(r);
}

Matrix orthonormality_penalty_gradient(const Matrix& u, double lambda) {
  Matrix g = matmul(u, kernels::parallel::gram(u) - Matrix::identity(u.cols()));
  g *= 4.0 * lambda;
  return g;
}

void TrainConfig::validate() const {
  if (steps < 1) throw ParameterError("train: steps must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("train: learning rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("train: momentum must lie in [0,1)");
  if (!(lambda >= 0.0)) throw ParameterError("train: lambda must be >= 0");
  if (phi != "softmax") {
    throw ParameterError("train: only softmax attention is trainable (thresholded attention has "
                         "zero gradient almost everywhere)");
  }
  AttentionConfig a;
  a.eta = eta;
  a.temperature = temperature;
  a.validate();
}

std::string to_string(TrainLoss loss) { return loss == TrainLoss::Mse ? "mse" : "neg_log_snr"; }

TrainLoss parse_train_loss(const std::string& name) {
  if (name == "mse") return TrainLoss::Mse;
  if (name == "neg_log_snr") return TrainLoss::NegLogSnr;
  throw ParameterError("unknown loss '" + name + "' (expected mse or neg_log_snr)");
}

std::string to_string(Optimizer opt) { return opt == Optimizer::Momentum ? "momentum" : "gd"; }

Optimizer parse_optimizer(const std::string& name) {
  if (name == "gd") return Optimizer::GradientDescent;
  if (name == "momentum") return Optimizer::Momentum;
  throw ParameterError("unknown optimizer '" + name + "' (expected gd or momentum)");
}

LayerStack random_stack(std::size_t d, std::size_t K, std::size_t p, std::size_t layers,
                        double scale, std::uint64_t seed) {
  if (d == 0 || K == 0 || p == 0) throw ParameterError("random_stack: d, K, p must be positive");
  Rng rng(seed, 2);
  const double sd = scale / std::sqrt(static_cast<double>(d));
  std::vector<std::vector<Matrix>> sets(layers);
  for (auto& set : sets) {
    for (std::size_t k = 0; k < K; ++k) {
      Matrix u(d, p);
      for (double& v : u.data()) v = sd * rng.normal();
      set.push_back(std::move(u));
    }
  }
  return LayerStack::untied(std::move(sets));
}

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Matrix clean_signal(const SubspaceModel& truth, const TokenBatch& batch) {
  Matrix out(batch.z.rows(), batch.z.cols());
  const auto ranges = batch.cluster_ranges();
  for (std::size_t k = 0; k < truth.K(); ++k)
    out.set_columns(ranges[k].begin, matmul(truth.basis(k).matrix(), batch.latents->signal[k]));
  return out;
}

struct LossEval {
  double value = 0.0;
  Matrix grad;
};

LossEval evaluate_loss(TrainLoss kind, const Matrix& out, const Matrix& target,
                       const SubspaceModel& truth, const std::vector<ColumnRange>& clusters) {
  LossEval e;
  if (kind == TrainLoss::Mse) {
    const double inv_n = 1.0 / static_cast<double>(out.cols());
    e.grad = out - target;
    e.value = half_sq_norm(e.grad) * inv_n;
    e.grad *= inv_n;
    return e;
  }
  e.grad = Matrix(out.rows(), out.cols());
  const double inv_k = 1.0 / static_cast<double>(clusters.size());
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const Matrix zk = out.columns(clusters[k].begin, clusters[k].count);
    const Matrix on = project(truth.basis(k), zk);
    const Matrix off = zk - on;
    const double s = 2.0 * half_sq_norm(on), n = 2.0 * half_sq_norm(off);
    e.value -= 0.5 * inv_k * (std::log(s) - std::log(n));
    Matrix g = (1.0 / n) * off - (1.0 / s) * on;
    g *= inv_k;
    e.grad.set_columns(clusters[k].begin, g);
  }
  return e;
}

double penalty_total(const LayerStack& stack, double lambda) {
  if (lambda == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t l = 0; l < stack.depth(); ++l)
    for (const auto& u : stack.layer(l)) s += orthonormality_penalty(u, lambda);
  return s;
}

}  // namespace

std::vector<double> mean_snr_profile(const LayerStack& stack, const SubspaceModel& truth,
                                     const TokenBatch& batch, double eta, double temperature) {
  const auto clusters = batch.cluster_ranges();
  std::vector<double> profile{mean(cluster_snr(truth, batch.z, clusters))};
  Matrix z = batch.z;
  for (std::size_t l = 0; l < stack.depth(); ++l) {
    z = mssa_forward_cached(stack.layer(l), z, eta, temperature).output;
    profile.push_back(mean(cluster_snr(truth, z, clusters)));
  }
  return profile;
}

TrainLog train(LayerStack& stack, const SubspaceModel& truth, std::span<const TokenBatch> batches,
               const TrainConfig& cfg) {
  cfg.validate();
  if (stack.is_tied()) throw ParameterError("train: stack must be untied");
  if (stack.depth() != cfg.layers) throw ParameterError("train: stack depth differs from cfg.layers");
  if (batches.empty()) throw ParameterError("train: no batches");
  for (const auto& b : batches) {
    if (!b.latents) throw ParameterError("train: batches need latents for the target");
    if (b.clusters() != truth.K() || b.z.rows() != truth.d()) {
      throw DimensionError("train: batch disagrees with the reference model");
    }
  }

  std::vector<std::vector<Matrix>> velocity;
  for (std::size_t l = 0; l < stack.depth(); ++l) {
    velocity.emplace_back();
    for (const auto& u : stack.layer(l)) velocity.back().emplace_back(u.rows(), u.cols());
  }

  std::vector<Matrix> targets;
  if (cfg.loss == TrainLoss::Mse)
    for (const auto& b : batches) targets.push_back(clean_signal(truth, b));
  auto target_of = [&](std::size_t i) -> const Matrix& {
    static const Matrix none;
    return targets.empty() ? none : targets[i];
  };

  auto forward = [&](const TokenBatch& b, std::vector<MssaCache>* caches) {
    Matrix z = b.z;
    for (std::size_t l = 0; l < stack.depth(); ++l) {
      CachedForward f = mssa_forward_cached(std::as_const(stack).layer(l), z, cfg.eta, cfg.temperature);
      z = std::move(f.output);
      if (caches) caches->push_back(std::move(f.cache));
    }
    return z;
  };

  TrainLog log;
  {
    const auto& b = batches.front();
    log.initial_mean_snr = mean(cluster_snr(truth, b.z, b.cluster_ranges()));
  }

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const std::size_t bi = t % batches.size();
    const TokenBatch& b = batches[bi];
    const auto clusters = b.cluster_ranges();
    std::vector<MssaCache> caches;
    Matrix out;
    try {
      out = forward(b, &caches);
    } catch (const NumericError&) {
      throw DivergenceError(t);
    }
    LossEval e = evaluate_loss(cfg.loss, out, target_of(bi), truth, clusters);
    const double loss = e.value + penalty_total(stack, cfg.lambda);
    if (!std::isfinite(loss) || !e.grad.all_finite()) throw DivergenceError(t);
    log.steps.push_back({t, loss, mean(cluster_snr(truth, out, clusters))});

    Matrix upstream = std::move(e.grad);
    for (std::size_t l = stack.depth(); l-- > 0;) {
      LayerGradients g = mssa_backward(caches[l], upstream);
      auto& bases = stack.layer(l);
      for (std::size_t k = 0; k < bases.size(); ++k) {
        Matrix& grad = g.d_bases[k];
        if (cfg.lambda > 0.0) grad += orthonormality_penalty_gradient(bases[k], cfg.lambda);
        if (!grad.all_finite()) throw DivergenceError(t);
        if (cfg.optimizer == Optimizer::Momentum) {
          Matrix& v = velocity[l][k];
          v *= cfg.momentum;
          v += grad;
          axpy(-cfg.learning_rate, v, bases[k]);
        } else {
          axpy(-cfg.learning_rate, grad, bases[k]);
        }
      }
      upstream = std::move(g.d_z);
    }
  }

  const auto& b0 = batches.front();
  const auto clusters = b0.cluster_ranges();
  Matrix out;
  try {
    out = forward(b0, nullptr);
  } catch (const NumericError&) {
    throw DivergenceError(cfg.steps);
  }
  log.final_loss = evaluate_loss(cfg.loss, out, target_of(0), truth, clusters).value +
                   penalty_total(stack, cfg.lambda);
  if (!std::isfinite(log.final_loss)) throw DivergenceError(cfg.steps);
  log.final_mean_snr = mean(cluster_snr(truth, out, clusters));
  for (std::size_t l = 0; l < stack.depth(); ++l) {
    log.orthonormality.emplace_back();
    for (const auto& u : stack.layer(l))
      log.orthonormality.back().push_back(
          frobenius_norm(kernels::parallel::gram(u) - Matrix::identity(u.cols())));
  }
  return log;
}

}  // namespace aot
