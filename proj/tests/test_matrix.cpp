#include <cmath>
#include <limits>

#include "doctest.h"

#include "aot/matrix.hpp"

using aot::Matrix;

TEST_CASE("shapes and construction") {
  const Matrix m(2, 3, 1.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.size() == 6);
  CHECK(m(1, 2) == 1.5);

  CHECK(Matrix{}.empty());
  CHECK_THROWS_AS(Matrix(0, 3), aot::DimensionError);
  CHECK_THROWS_AS(Matrix(3, 0), aot::DimensionError);
  CHECK_THROWS_AS((Matrix{{1, 2}, {3}}), aot::DimensionError);
  CHECK_THROWS_AS(Matrix::from_data(2, 2, {1, 2, 3}), aot::DimensionError);
}

TEST_CASE("initializer list is row-major") {
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  CHECK(m.data()[3] == 4);
  CHECK(m(0, 2) == 3);
  const Matrix t = m.transposed();
  CHECK(t.rows() == 3);
  CHECK(t(2, 1) == 6);
}

TEST_CASE("blocks and columns") {
  Matrix m{{1, 2, 3, 4}, {5, 6, 7, 8}};
  CHECK(m.columns(1, 2) == Matrix{{2, 3}, {6, 7}});
  CHECK(m.block(1, 2, 1, 2) == Matrix{{7, 8}});
  m.set_columns(2, Matrix{{0, 0}, {0, 0}});
  CHECK(m == Matrix{{1, 2, 0, 0}, {5, 6, 0, 0}});
  CHECK_THROWS_AS(m.columns(3, 2), aot::DimensionError);
  CHECK_THROWS_AS(m.set_columns(0, Matrix(3, 1)), aot::DimensionError);
}

TEST_CASE("arithmetic") {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{1, 1}, {1, 1}};
  CHECK(a + b == Matrix{{2, 3}, {4, 5}});
  CHECK(a - b == Matrix{{0, 1}, {2, 3}});
  CHECK(2.0 * a == Matrix{{2, 4}, {6, 8}});
  Matrix c = a;
  aot::axpy(-1.0, a, c);
  CHECK(aot::max_abs(c) == 0.0);
  CHECK(aot::max_abs_diff(a, b) == 3.0);
  CHECK_THROWS_AS(a + Matrix(2, 3), aot::DimensionError);
}

TEST_CASE("finiteness") {
  Matrix m(2, 2);
  CHECK(m.all_finite());
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(m.all_finite());
  m(1, 1) = INFINITY;
  CHECK_FALSE(m.all_finite());
}
