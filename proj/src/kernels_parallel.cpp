#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "aot/kernels.hpp"
#include "kernels_common.hpp"

namespace aot::kernels {

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

namespace {

using Index = std::ptrdiff_t;

// Columns handled together by one softmax task; keeps row segments contiguous.
constexpr std::size_t kSoftmaxPanel = 64;

}  // namespace

Matrix gemm(const Matrix& a, const Matrix& b) {
  detail::check_inner(a.cols(), b.rows(), "gemm", a, b);
  const std::size_t m = a.rows(), n = b.cols(), inner = a.cols();
  Matrix c(m, n);
#pragma omp parallel for schedule(static)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* __restrict ci = c.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = a(i, k);
      const double* __restrict bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  detail::check_inner(a.rows(), b.rows(), "gemm_tn", a, b);
  const std::size_t m = a.cols(), n = b.cols(), inner = a.rows();
  Matrix c(m, n);
#pragma omp parallel for schedule(static)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* __restrict ci = c.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aki = a(k, i);
      const double* __restrict bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  detail::check_inner(a.cols(), b.cols(), "gemm_nt", a, b);
  const std::size_t m = a.rows(), n = b.rows(), inner = a.cols();
  Matrix c(m, n);
#pragma omp parallel for schedule(static)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* ai = a.row(i).data();
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix gram(const Matrix& a) {
  detail::check_nonempty(a, "gram");
  const std::size_t n = a.cols(), inner = a.rows();
  Matrix c(n, n);
  // Upper triangle only; the product a_ki * a_kj commutes exactly, so the
  // mirrored lower triangle equals what a full gemm_tn would compute.
#pragma omp parallel for schedule(dynamic, 16)
  for (Index ii = 0; ii < static_cast<Index>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* __restrict ci = c.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aki = a(k, i);
      const double* __restrict ak = a.row(k).data();
      for (std::size_t j = i; j < n; ++j) ci[j] += aki * ak[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) c(j, i) = c(i, j);
  return c;
}

Matrix column_softmax(const Matrix& m, const SoftmaxOptions& opts) {
  detail::check_nonempty(m, "column_softmax");
  const std::size_t rows = m.rows(), cols = m.cols();
  Matrix out(rows, cols);
  const std::size_t panels = (cols + kSoftmaxPanel - 1) / kSoftmaxPanel;
#pragma omp parallel for schedule(static)
  for (Index pp = 0; pp < static_cast<Index>(panels); ++pp) {
    const std::size_t j0 = static_cast<std::size_t>(pp) * kSoftmaxPanel;
    const std::size_t j1 = std::min(cols, j0 + kSoftmaxPanel);
    const std::size_t w = j1 - j0;
    std::vector<double> mx(w, -HUGE_VAL), sum(w, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* src = m.row(i).data();
      double* dst = out.row(i).data();
      for (std::size_t j = j0; j < j1; ++j) {
        const double x = (opts.causal && i > j) ? kCausalMask : opts.scale * src[j];
        dst[j] = x;
        mx[j - j0] = std::max(mx[j - j0], x);
      }
    }
    for (std::size_t i = 0; i < rows; ++i) {
      double* dst = out.row(i).data();
      for (std::size_t j = j0; j < j1; ++j) {
        dst[j] = std::exp(dst[j] - mx[j - j0]);
        sum[j - j0] += dst[j];
      }
    }
    for (std::size_t i = 0; i < rows; ++i) {
      double* dst = out.row(i).data();
      for (std::size_t j = j0; j < j1; ++j) dst[j] /= sum[j - j0];
    }
  }
  return out;
}

}  // namespace parallel
}  // namespace aot::kernels
