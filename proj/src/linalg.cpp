#include "aot/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace aot {

OrthonormalBasis::OrthonormalBasis(Matrix m) : m_(std::move(m)) {
  if (m_.empty() || m_.cols() > m_.rows()) {
    throw DimensionError("OrthonormalBasis: need rows >= cols >= 1");
  }
  const double r = orthonormality_residual(m_);
  if (!(r <= kTolerance)) {
    throw DegenerateInputError("OrthonormalBasis: residual " + std::to_string(r) +
                               " exceeds tolerance");
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) { return kernels::parallel::gemm(a, b); }
Matrix matmul_tn(const Matrix& a, const Matrix& b) { return kernels::parallel::gemm_tn(a, b); }
Matrix matmul_nt(const Matrix& a, const Matrix& b) { return kernels::parallel::gemm_nt(a, b); }

Matrix column_softmax(const Matrix& m, const kernels::SoftmaxOptions& opts) {
  return kernels::parallel::column_softmax(m, opts);
}

Matrix hard_threshold(const Matrix& m, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ParameterError("hard_threshold: tau must lie in (0,1), got " + std::to_string(tau));
  }
  Matrix out = m;
  for (double& x : out.data()) x = x > tau ? tau : 0.0;
  return out;
}

OrthonormalBasis orthonormalize(const Matrix& g) {
  if (g.empty()) throw DimensionError("orthonormalize: empty input");
  if (g.rows() < g.cols()) {
    throw DimensionError("orthonormalize: more columns than rows (" + std::to_string(g.cols()) +
                         " > " + std::to_string(g.rows()) + ")");
  }
  if (!g.all_finite()) throw DegenerateInputError("orthonormalize: non-finite input");

  const std::size_t m = g.rows(), n = g.cols();
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += g(i, j) * g(i, j);
    scale = std::max(scale, std::sqrt(s));
  }
  if (scale == 0.0) throw DegenerateInputError("orthonormalize: zero matrix");

  Matrix a = g;
  std::vector<std::vector<double>> reflectors(n);
  for (std::size_t j = 0; j < n; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < m; ++i) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    if (norm <= 1e-10 * scale) {
      throw DegenerateInputError("orthonormalize: rank deficient at column " + std::to_string(j));
    }
    const double alpha = a(j, j) > 0.0 ? -norm : norm;
    std::vector<double> v(m - j);
    for (std::size_t i = j; i < m; ++i) v[i - j] = a(i, j);
    v[0] -= alpha;
    const double vnorm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= vnorm;
    for (std::size_t c = j; c < n; ++c) {
      double dot = 0.0;
      for (std::size_t i = j; i < m; ++i) dot += v[i - j] * a(i, c);
      for (std::size_t i = j; i < m; ++i) a(i, c) -= 2.0 * dot * v[i - j];
    }
    reflectors[j] = std::move(v);
  }

  // Q = H_0 ... H_{n-1} [I; 0]
  Matrix q(m, n);
  for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
  for (std::size_t jj = n; jj-- > 0;) {
    const auto& v = reflectors[jj];
    for (std::size_t c = 0; c < n; ++c) {
      double dot = 0.0;
      for (std::size_t i = jj; i < m; ++i) dot += v[i - jj] * q(i, c);
      for (std::size_t i = jj; i < m; ++i) q(i, c) -= 2.0 * dot * v[i - jj];
    }
  }

  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(q(i, c)) > 1e-12) {
        if (q(i, c) < 0.0)
          for (std::size_t r = 0; r < m; ++r) q(r, c) = -q(r, c);
        break;
      }
    }
  }
  return OrthonormalBasis(std::move(q));
}

double frobenius_norm(const Matrix& m) noexcept {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return std::sqrt(s);
}

double orthonormality_residual(const Matrix& b) {
  const Matrix g = kernels::reference::gram(b);
  double r = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      r = std::max(r, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return r;
}

bool block_pattern_match(const Matrix& m, std::span<const std::size_t> sizes, std::size_t k,
                         double tau) {
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (m.rows() != m.cols() || m.rows() != total) {
    throw DimensionError("block_pattern_match: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", partition sums to " +
                         std::to_string(total));
  }
  if (k >= sizes.size()) throw DimensionError("block_pattern_match: cluster index out of range");
  const std::size_t begin = std::accumulate(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(k), std::size_t{0});
  const std::size_t end = begin + sizes[k];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double want = (i == j && i >= begin && i < end) ? tau : 0.0;
      if (r[j] != want) return false;
    }
  }
  return true;
}

}  // namespace aot
