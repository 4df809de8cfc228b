#pragma once

#include <cstddef>
#include <span>

#include "aot/kernels.hpp"
#include "aot/matrix.hpp"

namespace aot {

/// Matrix with orthonormal columns (d x m, m <= d).
class OrthonormalBasis {
public:
  /// Tolerance on max |B^T B - I| accepted at construction.
  static constexpr double kTolerance = 1e-10;

  OrthonormalBasis() = default;
  /// Throws DegenerateInputError if `m` is not orthonormal within kTolerance.
  explicit OrthonormalBasis(Matrix m);

  const Matrix& matrix() const noexcept { return m_; }
  std::size_t dim() const noexcept { return m_.rows(); }
  std::size_t rank() const noexcept { return m_.cols(); }

private:
  Matrix m_;
};

// All products run the OpenMP kernels; they match the serial reference bit for bit.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Column-wise softmax with per-column max subtraction.
Matrix column_softmax(const Matrix& m, const kernels::SoftmaxOptions& opts = {});

/// tau where m_ij > tau, else 0. Throws ParameterError unless tau is in (0, 1).
Matrix hard_threshold(const Matrix& m, double tau);

/// Thin Householder QR of `g`; returns the Q factor with the first non-negligible
/// entry of each column made positive. Throws DegenerateInputError when a
/// diagonal entry of R falls below 1e-10 times the largest column norm of `g`.
OrthonormalBasis orthonormalize(const Matrix& g);

double frobenius_norm(const Matrix& m) noexcept;

/// max |B^T B - I|
double orthonormality_residual(const Matrix& b);

/// True iff `m` is exactly tau on the diagonal of block `k` and 0 everywhere
/// else, blocks being given by `sizes` (contiguous, in order).
bool block_pattern_match(const Matrix& m, std::span<const std::size_t> sizes, std::size_t k,
                         double tau);

}  // namespace aot
