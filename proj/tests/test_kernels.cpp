// The OpenMP kernels must agree with the serial reference to the last bit.

#include <omp.h>

#include "doctest.h"

#include "aot/kernels.hpp"
#include "aot/rng.hpp"

using aot::Matrix;
namespace ref = aot::kernels::reference;
namespace par = aot::kernels::parallel;

namespace {

Matrix random(std::size_t r, std::size_t c, aot::Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

// Shapes around the softmax panel width and the gram chunk size.
constexpr std::size_t kShapes[][3] = {{1, 1, 1},   {3, 4, 2},   {7, 13, 5},  {16, 64, 16},
                                      {33, 65, 17}, {64, 130, 3}, {5, 200, 31}};

void check_all(int threads) {
  omp_set_num_threads(threads);
  aot::Rng rng(11, static_cast<std::uint64_t>(threads));
  for (const auto& s : kShapes) {
    const Matrix a = random(s[0], s[1], rng);
    const Matrix b = random(s[1], s[2], rng);
    const Matrix c = random(s[0], s[2], rng);
    const Matrix d = random(s[2], s[1], rng);
    CHECK(par::gemm(a, b) == ref::gemm(a, b));
    CHECK(par::gemm_tn(a, c) == ref::gemm_tn(a, c));
    CHECK(par::gemm_nt(a, d) == ref::gemm_nt(a, d));
    CHECK(par::gram(a) == ref::gram(a));
    const Matrix sq = random(s[1], s[1], rng);
    CHECK(par::column_softmax(sq) == ref::column_softmax(sq));
    CHECK(par::column_softmax(sq, {0.25, true}) == ref::column_softmax(sq, {0.25, true}));
    CHECK(par::column_softmax(a, {3.0, false}) == ref::column_softmax(a, {3.0, false}));
  }
}

}  // namespace

TEST_CASE("parallel kernels are bit-identical to the reference") {
  const int saved = omp_get_max_threads();
  for (int t : {1, 2, 3, 8}) {
    CAPTURE(t);
    check_all(t);
  }
  omp_set_num_threads(saved);
}

TEST_CASE("gemm against a hand-written triple loop") {
  aot::Rng rng(5);
  const Matrix a = random(3, 4, rng);
  const Matrix b = random(4, 2, rng);
  Matrix expected(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      expected(i, j) = s;
    }
  CHECK(par::gemm(a, b) == expected);
  CHECK(par::gemm_tn(a.transposed(), b) == expected);
  CHECK(par::gemm_nt(a, b.transposed()) == expected);
}

TEST_CASE("gram is symmetric") {
  aot::Rng rng(6);
  const Matrix a = random(9, 40, rng);
  const Matrix g = par::gram(a);
  CHECK(g == g.transposed());
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(par::gemm(Matrix(2, 3), Matrix(2, 3)), aot::DimensionError);
  CHECK_THROWS_AS(ref::gemm(Matrix(2, 3), Matrix(2, 3)), aot::DimensionError);
  CHECK_THROWS_AS(par::gemm_tn(Matrix(2, 3), Matrix(3, 3)), aot::DimensionError);
  CHECK_THROWS_AS(par::gemm_nt(Matrix(2, 3), Matrix(3, 2)), aot::DimensionError);
  CHECK_THROWS_AS(par::gram(Matrix{}), aot::DimensionError);
  CHECK_THROWS_AS(par::column_softmax(Matrix{}), aot::DimensionError);
}

TEST_CASE("causal softmax hides future rows") {
  aot::Rng rng(8);
  const Matrix m = random(6, 6, rng);
  const Matrix s = par::column_softmax(m, {1.0, true});
  for (std::size_t j = 0; j < 6; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      if (i > j) CHECK(s(i, j) == 0.0);
      sum += s(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(s(0, 0) == 1.0);
}
