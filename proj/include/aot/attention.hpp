#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aot/model.hpp"
#include "aot/trace.hpp"

namespace aot {

/// Column-wise attention nonlinearity: plain softmax, or softmax followed by
/// the hard threshold x -> tau * 1{x > tau}.
struct Phi {
  enum class Kind { Softmax, Threshold };

  Kind kind = Kind::Softmax;
  double tau = 0.0;

  static Phi softmax() noexcept { return {}; }
  static Phi threshold(double tau) noexcept { return {Kind::Threshold, tau}; }
  bool thresholded() const noexcept { return kind == Kind::Threshold; }
  std::string name() const { return thresholded() ? "threshold" : "softmax"; }
};

struct AttentionConfig {
  double eta = 1.0;
  Phi phi;
  bool causal = false;
  /// Standardize each token before attention (no learnable gain or bias).
  bool prenorm = false;
  /// Softmax logits are divided by this; must stay 1 for thresholded attention.
  double temperature = 1.0;

  /// Throws ParameterError on eta < 0, tau outside (0,1), causal or
  /// temperature != 1 combined with the threshold, or temperature <= 0.
  void validate() const;
};

/// Called once per head with that head's N x N attention matrix phi(M_k).
using HeadObserver = std::function<void(std::size_t head, const Matrix& attention)>;

/// phi applied column-wise to a logit matrix, honouring temperature and mask.
Matrix attention_weights(const Matrix& logits, const AttentionConfig& cfg);

/// sum_k U_k U_k^T X phi((U_k^T X)^T (U_k^T X)) with X = z, or X = prenorm(z)
/// when cfg.prenorm is set. Heads are accumulated in index order.
Matrix mssa(std::span<const Matrix> bases, const Matrix& z, const AttentionConfig& cfg,
            const HeadObserver& observer = {});
Matrix mssa(const SubspaceModel& model, const Matrix& z, const AttentionConfig& cfg,
            const HeadObserver& observer = {});

/// Per-head query/key/value maps (d x p each) and the output map (d x Kp).
struct MhsaParams {
  std::vector<Matrix> query;
  std::vector<Matrix> key;
  std::vector<Matrix> value;
  Matrix output;

  std::size_t heads() const noexcept { return query.size(); }
  std::size_t parameter_count() const noexcept;
  void validate(std::size_t d) const;
};

/// W_O [head_1; ...; head_K] with head_k = W_V^T X phi(X^T W_Q W_K^T X).
Matrix mhsa(const MhsaParams& params, const Matrix& z, const AttentionConfig& cfg,
            const HeadObserver& observer = {});

/// W_Q = W_K = W_V = U_k and W_O = [U_1 ... U_K], as separate copies.
MhsaParams mssa_as_mhsa(const SubspaceModel& model);

/// z + eta * op_output
Matrix layer_step(const Matrix& z, const Matrix& op_output, double eta);

/// Column standardization: (x - mean) / sqrt(var + 1e-6), statistics over the d coordinates.
Matrix prenorm(const Matrix& z);

/// L layers of bases, either one shared set (tied) or one set per layer.
class LayerStack {
public:
  static LayerStack tied(std::vector<Matrix> bases, std::size_t layers);
  static LayerStack tied(const SubspaceModel& model, std::size_t layers);
  static LayerStack untied(std::vector<std::vector<Matrix>> per_layer);

  std::size_t depth() const noexcept { return depth_; }
  bool is_tied() const noexcept { return tied_; }
  std::size_t heads() const noexcept { return sets_.empty() ? 0 : sets_.front().size(); }
  const std::vector<Matrix>& layer(std::size_t l) const;
  /// Untied stacks only.
  std::vector<Matrix>& layer(std::size_t l);

private:
  LayerStack() = default;
  void check_consistent() const;

  std::vector<std::vector<Matrix>> sets_;
  std::size_t depth_ = 0;
  bool tied_ = false;
};

/// What to record while unrolling. SNR is recorded only when `reference` is
/// set; patterns only for thresholded attention.
struct TraceOptions {
  const SubspaceModel* reference = nullptr;
  std::vector<ColumnRange> clusters;
  TraceParams params;
};

struct UnrollResult {
  Matrix state;
  DenoiseTrace trace;
};

/// Applies Z <- Z + eta * MSSA_l(Z) for l = 0..L-1. Non-finite states raise
/// NumericError carrying the failing layer index.
UnrollResult unroll(const LayerStack& stack, const Matrix& z0, const AttentionConfig& cfg,
                    const TraceOptions& options = {});

/// One unrolled layer; sets *pattern_held (if given) to whether every head
/// matched the block pattern for `clusters`.
Matrix attention_layer(std::span<const Matrix> bases, const Matrix& z, const AttentionConfig& cfg,
                       const std::vector<ColumnRange>* clusters = nullptr,
                       bool* pattern_held = nullptr);

}  // namespace aot
