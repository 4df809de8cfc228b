#include "aot/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aot {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("Matrix: dimensions must be positive, got " + std::to_string(rows) +
                         "x" + std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  if (rows_ == 0 || cols_ == 0) throw DimensionError("Matrix: empty initializer");
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_data(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) {
    throw DimensionError("Matrix::from_data: expected " + std::to_string(rows * cols) +
                         " entries, got " + std::to_string(data.size()));
  }
  Matrix m(rows, cols);
  m.data_ = std::move(data);
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::columns(std::size_t first, std::size_t count) const {
  return block(0, first, rows_, count);
}

void Matrix::set_columns(std::size_t first, const Matrix& block) {
  if (block.rows() != rows_) throw DimensionError("set_columns: row count mismatch");
  set_block(0, first, block);
}

Matrix Matrix::block(std::size_t row, std::size_t col, std::size_t nrows,
                     std::size_t ncols) const {
  if (row + nrows > rows_ || col + ncols > cols_) {
    throw DimensionError("block: range exceeds " + shape(*this));
  }
  Matrix b(nrows, ncols);
  for (std::size_t i = 0; i < nrows; ++i)
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>((row + i) * cols_ + col), ncols,
                b.row(i).begin());
  return b;
}

void Matrix::set_block(std::size_t row, std::size_t col, const Matrix& block) {
  if (row + block.rows() > rows_ || col + block.cols() > cols_) {
    throw DimensionError("set_block: " + shape(block) + " at (" + std::to_string(row) + "," +
                         std::to_string(col) + ") exceeds " + shape(*this));
  }
  for (std::size_t i = 0; i < block.rows(); ++i)
    std::copy(block.row(i).begin(), block.row(i).end(),
              data_.begin() + static_cast<std::ptrdiff_t>((row + i) * cols_ + col));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

void axpy(double s, const Matrix& b, Matrix& a) {
  require_same_shape(a, b, "axpy");
  auto out = a.data();
  auto in = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * in[i];
}

double max_abs(const Matrix& m) noexcept {
  double r = 0.0;
  for (double x : m.data()) r = std::max(r, std::abs(x));
  return r;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a.data()[i] - b.data()[i]));
  return r;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

}  // namespace aot
