#include "aot/attention.hpp"

#include <cmath>
#include <string>

namespace aot {

void AttentionConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw ParameterError("attention: eta must be finite and >= 0");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ParameterError("attention: temperature must be positive");
  }
  if (phi.thresholded()) {
    if (!(phi.tau > 0.0 && phi.tau < 1.0)) {
      throw ParameterError("attention: threshold tau must lie in (0,1), got " +
                           std::to_string(phi.tau));
    }
    if (causal) throw ParameterError("attention: causal masking is not defined for the threshold");
    if (temperature != 1.0) {
      throw ParameterError("attention: temperature is only available for plain softmax");
    }
  }
}

Matrix attention_weights(const Matrix& logits, const AttentionConfig& cfg) {
  Matrix s = column_softmax(logits, {1.0 / cfg.temperature, cfg.causal});
  if (cfg.phi.thresholded()) s = hard_threshold(s, cfg.phi.tau);
  return s;
}

namespace {

void check_bases(std::span<const Matrix> bases, std::size_t d, const char* op) {
  if (bases.empty()) throw DimensionError(std::string(op) + ": no heads");
  const std::size_t p = bases.front().cols();
  for (const auto& u : bases) {
    if (u.rows() != d || u.cols() != p) {
      throw DimensionError(std::string(op) + ": head bases must all be " + std::to_string(d) +
                           "x" + std::to_string(p));
    }
  }
}

}  // namespace

Matrix mssa(std::span<const Matrix> bases, const Matrix& z, const AttentionConfig& cfg,
            const HeadObserver& observer) {
  cfg.validate();
  if (z.empty()) throw DimensionError("mssa: empty tokens");
  check_bases(bases, z.rows(), "mssa");
  if (!z.all_finite()) throw NumericError("mssa: non-finite input tokens");

  const Matrix normed = cfg.prenorm ? prenorm(z) : Matrix{};
  const Matrix& x = cfg.prenorm ? normed : z;
  Matrix out(z.rows(), z.cols());
  for (std::size_t k = 0; k < bases.size(); ++k) {
    const Matrix proj = matmul_tn(bases[k], x);  // p x N
    const Matrix weights = attention_weights(kernels::parallel::gram(proj), cfg);
    if (observer) observer(k, weights);
    out += matmul(bases[k], matmul(proj, weights));
  }
  if (!out.all_finite()) throw NumericError("mssa: non-finite output");
  return out;
}

Matrix mssa(const SubspaceModel& model, const Matrix& z, const AttentionConfig& cfg,
            const HeadObserver& observer) {
  const auto bases = model.basis_matrices();
  return mssa(bases, z, cfg, observer);
}

std::size_t MhsaParams::parameter_count() const noexcept {
  std::size_t n = output.size();
  for (std::size_t k = 0; k < query.size(); ++k)
    n += query[k].size() + key[k].size() + value[k].size();
  return n;
}

void MhsaParams::validate(std::size_t d) const {
  if (query.empty() || key.size() != query.size() || value.size() != query.size()) {
    throw DimensionError("mhsa: query/key/value head counts differ or are zero");
  }
  check_bases(query, d, "mhsa query");
  check_bases(key, d, "mhsa key");
  check_bases(value, d, "mhsa value");
  if (key.front().cols() != query.front().cols()) {
    throw DimensionError("mhsa: query and key widths differ");
  }
  const std::size_t stacked = heads() * value.front().cols();
  if (output.rows() != d || output.cols() != stacked) {
    throw DimensionError("mhsa: output map must be " + std::to_string(d) + "x" +
                         std::to_string(stacked));
  }
}

Matrix mhsa(const MhsaParams& params, const Matrix& z, const AttentionConfig& cfg,
            const HeadObserver& observer) {
  cfg.validate();
  if (z.empty()) throw DimensionError("mhsa: empty tokens");
  params.validate(z.rows());
  if (!z.all_finite()) throw NumericError("mhsa: non-finite input tokens");

  const Matrix normed = cfg.prenorm ? prenorm(z) : Matrix{};
  const Matrix& x = cfg.prenorm ? normed : z;
  const std::size_t pv = params.value.front().cols();
  Matrix heads(params.heads() * pv, z.cols());
  for (std::size_t k = 0; k < params.heads(); ++k) {
    const Matrix q = matmul_tn(params.query[k], x);
    const Matrix kk = matmul_tn(params.key[k], x);
    const Matrix weights = attention_weights(matmul_tn(q, kk), cfg);
    if (observer) observer(k, weights);
    heads.set_block(k * pv, 0, matmul(matmul_tn(params.value[k], x), weights));
  }
  Matrix out = matmul(params.output, heads);
  if (!out.all_finite()) throw NumericError("mhsa: non-finite output");
  return out;
}

MhsaParams mssa_as_mhsa(const SubspaceModel& model) {
  MhsaParams params;
  for (std::size_t k = 0; k < model.K(); ++k) {
    params.query.push_back(model.basis(k).matrix());
    params.key.push_back(model.basis(k).matrix());
    params.value.push_back(model.basis(k).matrix());
  }
  params.output = model.stacked();
  return params;
}

Matrix layer_step(const Matrix& z, const Matrix& op_output, double eta) {
  require_same_shape(z, op_output, "layer_step");
  Matrix out = z;
  axpy(eta, op_output, out);
  return out;
}

Matrix prenorm(const Matrix& z) {
  if (z.empty()) throw DimensionError("prenorm: empty input");
  constexpr double kEps = 1e-6;
  const auto d = static_cast<double>(z.rows());
  Matrix out(z.rows(), z.cols());
  for (std::size_t j = 0; j < z.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) mean += z(i, j);
    mean /= d;
    double var = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) var += (z(i, j) - mean) * (z(i, j) - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kEps);
    for (std::size_t i = 0; i < z.rows(); ++i) out(i, j) = (z(i, j) - mean) * inv;
  }
  return out;
}

LayerStack LayerStack::tied(std::vector<Matrix> bases, std::size_t layers) {
  LayerStack s;
  s.sets_.push_back(std::move(bases));
  s.depth_ = layers;
  s.tied_ = true;
  s.check_consistent();
  return s;
}

LayerStack LayerStack::tied(const SubspaceModel& model, std::size_t layers) {
  return tied(model.basis_matrices(), layers);
}

LayerStack LayerStack::untied(std::vector<std::vector<Matrix>> per_layer) {
  LayerStack s;
  s.depth_ = per_layer.size();
  s.sets_ = std::move(per_layer);
  s.tied_ = false;
  s.check_consistent();
  return s;
}

void LayerStack::check_consistent() const {
  if (sets_.empty()) return;
  const auto& first = sets_.front();
  if (first.empty()) throw DimensionError("LayerStack: a layer has no heads");
  for (const auto& set : sets_) {
    if (set.size() != first.size()) throw DimensionError("LayerStack: head count varies");
    for (const auto& u : set) {
      if (u.rows() != first.front().rows() || u.cols() != first.front().cols()) {
        throw DimensionError("LayerStack: basis shapes vary across heads or layers");
      }
    }
  }
}

const std::vector<Matrix>& LayerStack::layer(std::size_t l) const {
  if (l >= depth_) throw DimensionError("LayerStack: layer index out of range");
  return tied_ ? sets_.front() : sets_[l];
}

std::vector<Matrix>& LayerStack::layer(std::size_t l) {
  if (tied_) throw ParameterError("LayerStack: tied stacks are read-only per layer");
  if (l >= depth_) throw DimensionError("LayerStack: layer index out of range");
  return sets_[l];
}

Matrix attention_layer(std::span<const Matrix> bases, const Matrix& z, const AttentionConfig& cfg,
                       const std::vector<ColumnRange>* clusters, bool* pattern_held) {
  const bool track = pattern_held && clusters && cfg.phi.thresholded();
  std::vector<std::size_t> sizes;
  if (track) {
    if (clusters->size() != bases.size()) {
      throw DimensionError("attention_layer: pattern tracking needs one cluster per head");
    }
    for (const auto& c : *clusters) sizes.push_back(c.count);
    *pattern_held = true;
  }
  HeadObserver observer;
  if (track) {
    observer = [&](std::size_t head, const Matrix& w) {
      if (*pattern_held && !block_pattern_match(w, sizes, head, cfg.phi.tau)) *pattern_held = false;
    };
  }
  return layer_step(z, mssa(bases, z, cfg, observer), cfg.eta);
}

UnrollResult unroll(const LayerStack& stack, const Matrix& z0, const AttentionConfig& cfg,
                    const TraceOptions& options) {
  cfg.validate();
  UnrollResult result{z0, {}};
  result.trace.params = options.params;
  const bool record_snr = options.reference != nullptr;
  if (record_snr) result.trace.snr.push_back(cluster_snr(*options.reference, z0, options.clusters));

  const bool track = cfg.phi.thresholded() && !options.clusters.empty();
  for (std::size_t l = 0; l < stack.depth(); ++l) {
    bool held = false;
    try {
      result.state = attention_layer(stack.layer(l), result.state, cfg,
                                     track ? &options.clusters : nullptr, track ? &held : nullptr);
    } catch (const NumericError& e) {
      throw NumericError(e.what(), static_cast<std::ptrdiff_t>(l));
    }
    if (!result.state.all_finite()) {
      throw NumericError("unroll: non-finite state", static_cast<std::ptrdiff_t>(l));
    }
    if (track) result.trace.pattern.push_back(held);
    if (record_snr) {
      result.trace.snr.push_back(cluster_snr(*options.reference, result.state, options.clusters));
    }
  }
  return result;
}

}  // namespace aot
