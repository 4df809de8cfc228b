#pragma once

// Dense kernels in two flavours.
//
// `reference` is the plain serial implementation kept for testing.
// `parallel` splits work across OpenMP threads by output row (or column for
// the softmax) and keeps the per-entry summation order of the reference, so
// both produce bit-identical results for any thread count.

#include "aot/matrix.hpp"

namespace aot::kernels {

/// Logit assigned to masked (future) positions before the softmax.
inline constexpr double kCausalMask = -1e30;

struct SoftmaxOptions {
  double scale = 1.0;   ///< logits are multiplied by this before normalizing
  bool causal = false;  ///< column j only sees rows 0..j
};

namespace reference {

Matrix gemm(const Matrix& a, const Matrix& b);     ///< a * b
Matrix gemm_tn(const Matrix& a, const Matrix& b);  ///< a^T * b
Matrix gemm_nt(const Matrix& a, const Matrix& b);  ///< a * b^T
Matrix gram(const Matrix& a);                      ///< a^T * a
Matrix column_softmax(const Matrix& m, const SoftmaxOptions& opts = {});

}  // namespace reference

namespace parallel {

Matrix gemm(const Matrix& a, const Matrix& b);
Matrix gemm_tn(const Matrix& a, const Matrix& b);
Matrix gemm_nt(const Matrix& a, const Matrix& b);
Matrix gram(const Matrix& a);
Matrix column_softmax(const Matrix& m, const SoftmaxOptions& opts = {});

}  // namespace parallel

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int thread_count();

}  // namespace aot::kernels
