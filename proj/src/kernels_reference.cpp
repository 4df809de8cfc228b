#include <algorithm>
#include <cmath>
#include <string>

#include "aot/kernels.hpp"
#include "kernels_common.hpp"

namespace aot::kernels::reference {

Matrix gemm(const Matrix& a, const Matrix& b) {
  detail::check_inner(a.cols(), b.rows(), "gemm", a, b);
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  detail::check_inner(a.rows(), b.rows(), "gemm_tn", a, b);
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  detail::check_inner(a.cols(), b.cols(), "gemm_nt", a, b);
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

Matrix gram(const Matrix& a) { return gemm_tn(a, a); }

Matrix column_softmax(const Matrix& m, const SoftmaxOptions& opts) {
  detail::check_nonempty(m, "column_softmax");
  Matrix out(m.rows(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double mx = -HUGE_VAL;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double x = (opts.causal && i > j) ? kCausalMask : opts.scale * m(i, j);
      out(i, j) = x;
      mx = std::max(mx, x);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      out(i, j) = std::exp(out(i, j) - mx);
      sum += out(i, j);
    }
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) /= sum;
  }
  return out;
}

}  // namespace aot::kernels::reference
