#include <cmath>
#include <numeric>

#include "doctest.h"

#include "aot/model.hpp"
#include "support.hpp"

using aot::Matrix;

namespace {

aot::GaussianMixtureConfig mixture(std::size_t d, std::size_t K, std::size_t p, std::size_t nk,
                                   double delta, std::uint64_t seed) {
  aot::GaussianMixtureConfig c;
  c.d = d;
  c.K = K;
  c.p = p;
  c.tokens_per_cluster = nk;
  c.delta = delta;
  c.seed = seed;
  return c;
}

// U_k A_k + sum_{j != k} U_j E_{k,j}, written out column by column.
Matrix rebuild_cluster(const aot::SubspaceModel& m, const aot::Latents& lat, std::size_t k) {
  const std::size_t nk = lat.signal[k].cols();
  Matrix out(m.d(), nk);
  for (std::size_t j = 0; j < m.K(); ++j) {
    const Matrix& coeff = j == k ? lat.signal[k] : lat.noise[k][j];
    const Matrix& u = m.basis(j).matrix();
    for (std::size_t c = 0; c < nk; ++c)
      for (std::size_t r = 0; r < m.d(); ++r) {
        double s = 0.0;
        for (std::size_t q = 0; q < m.p(); ++q) s += u(r, q) * coeff(q, c);
        out(r, c) += s;
      }
  }
  return out;
}

}  // namespace

TEST_CASE("sample_bases examples") {
  const auto two = aot::sample_bases(4, 2, 1, 17);
  const Matrix& u1 = two.basis(0).matrix();
  const Matrix& u2 = two.basis(1).matrix();
  double dot = 0.0;
  for (std::size_t i = 0; i < 4; ++i) dot += u1(i, 0) * u2(i, 0);
  CHECK(std::abs(dot) <= 1e-10);

  const auto square = aot::sample_bases(6, 3, 2, 5);
  CHECK(std::abs(std::abs(aot::test::to_eigen(square.stacked()).determinant()) - 1.0) <= 1e-8);

  const auto big = aot::sample_bases(128, 4, 32, 0);
  CHECK(aot::orthonormality_residual(big.stacked()) <= 1e-9);
  CHECK(big.stacked().cols() == 128);

  CHECK_THROWS_AS(aot::sample_bases(5, 2, 3, 0), aot::ParameterError);
  CHECK_THROWS_AS(aot::sample_bases(5, 0, 3, 0), aot::ParameterError);
}

TEST_CASE("sample_bases is deterministic and seed-dependent") {
  CHECK(aot::sample_bases(20, 3, 4, 9).stacked() == aot::sample_bases(20, 3, 4, 9).stacked());
  CHECK_FALSE(aot::sample_bases(20, 3, 4, 9).stacked() ==
              aot::sample_bases(20, 3, 4, 10).stacked());
}

TEST_CASE("SubspaceModel rejects non-orthogonal stacks") {
  const Matrix e1{{1}, {0}, {0}};
  const Matrix tilted{{std::sqrt(0.5)}, {std::sqrt(0.5)}, {0}};
  CHECK_THROWS_AS(aot::SubspaceModel({aot::OrthonormalBasis(e1), aot::OrthonormalBasis(tilted)}),
                  aot::DegenerateInputError);
  const Matrix two{{1, 0}, {0, 1}, {0, 0}};
  CHECK_THROWS_AS(aot::SubspaceModel({aot::OrthonormalBasis(e1), aot::OrthonormalBasis(two)}),
                  aot::DimensionError);
}

TEST_CASE("noise-free tokens lie in their subspace") {
  const auto model = aot::sample_bases(24, 3, 4, 1);
  const auto batch = aot::sample_tokens(model, mixture(24, 3, 4, 10, 0.0, 2));
  for (std::size_t k = 0; k < 3; ++k) {
    const auto r = batch.cluster(k);
    const Matrix zk = batch.z.columns(r.begin, r.count);
    CHECK(aot::frobenius_norm(zk - aot::project(model.basis(k), zk)) <= 1e-12);
    CHECK(aot::max_abs_diff(aot::project(model.basis(k), zk), zk) <= 1e-12);
  }
}

TEST_CASE("layout and reconstruction") {
  const auto model = aot::sample_bases(30, 3, 5, 3);
  const auto batch = aot::sample_tokens(model, mixture(30, 3, 5, 7, 0.4, 4));
  REQUIRE(batch.latents);
  CHECK(batch.z.cols() == 21);
  CHECK(batch.cluster_sizes == std::vector<std::size_t>{7, 7, 7});
  for (std::size_t i = 0; i < 21; ++i) CHECK(batch.labels[i] == i / 7);
  CHECK(batch.latents->noise[1][1].empty());

  for (std::size_t k = 0; k < 3; ++k) {
    const auto r = batch.cluster(k);
    const Matrix zk = batch.z.columns(r.begin, r.count);
    CHECK(aot::frobenius_norm(zk - rebuild_cluster(model, *batch.latents, k)) <=
          1e-12 * aot::frobenius_norm(zk));
  }
}

TEST_CASE("cross-cluster projection recovers the noise factor") {
  const auto model = aot::sample_bases(30, 3, 5, 3);
  const auto batch = aot::sample_tokens(model, mixture(30, 3, 5, 7, 0.4, 4));
  const auto r = batch.cluster(2);
  const Matrix z2 = batch.z.columns(r.begin, r.count);
  const Matrix expected = aot::matmul(model.basis(0).matrix(), batch.latents->noise[2][0]);
  CHECK(aot::max_abs_diff(aot::project(model.basis(0), z2), expected) <= 1e-10);
  CHECK(aot::max_abs(aot::project(model.basis(0), Matrix(30, 4))) == 0.0);
  CHECK_THROWS_AS(aot::project(model.basis(0), Matrix(29, 4)), aot::DimensionError);
}

TEST_CASE("batches are bit-identical for identical inputs") {
  const auto model = aot::sample_bases(16, 2, 4, 8);
  const auto cfg = mixture(16, 2, 4, 9, 0.3, 12);
  const auto a = aot::sample_tokens(model, cfg);
  const auto b = aot::sample_tokens(model, cfg);
  CHECK(a.z == b.z);
  CHECK(a.latents->signal[1] == b.latents->signal[1]);
  auto other = cfg;
  other.seed = 13;
  CHECK_FALSE(aot::sample_tokens(model, other).z == a.z);
}

TEST_CASE("latent moments") {
  const double delta = 0.2;
  const auto model = aot::sample_bases(128, 4, 32, 0);
  const auto batch = aot::sample_tokens(model, mixture(128, 4, 32, 256, delta, 1));
  const auto& lat = *batch.latents;

  double sq = 0.0;
  for (const Matrix& a : lat.signal)
    for (double v : a.data()) sq += v * v;
  const double mean_norm2 = sq / 1024.0;
  CHECK(std::abs(mean_norm2 - 32.0) <= 0.05 * 32.0);

  for (std::size_t k = 0; k < 4; ++k) {
    const auto& a = lat.signal[k].data();
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(256.0 * 32.0));

    double s = 0.0, s2 = 0.0, n = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == k) continue;
      for (double v : lat.noise[k][j].data()) {
        s += v;
        s2 += v * v;
        n += 1.0;
      }
    }
    const double var = s2 / n - (s / n) * (s / n);
    CHECK(std::abs(var - delta * delta) <= 0.1 * delta * delta);
  }
}

TEST_CASE("mixture config validation") {
  const auto model = aot::sample_bases(8, 2, 2, 0);
  CHECK_THROWS_AS(aot::sample_tokens(model, mixture(8, 2, 2, 0, 0.1, 0)), aot::ParameterError);
  CHECK_THROWS_AS(aot::sample_tokens(model, mixture(8, 2, 2, 4, -0.1, 0)), aot::ParameterError);
  CHECK_THROWS_AS(aot::sample_tokens(model, mixture(9, 2, 2, 4, 0.1, 0)), aot::Error);
}

TEST_CASE("closed form state") {
  const auto model = aot::sample_bases(24, 3, 4, 6);
  const auto batch = aot::sample_tokens(model, mixture(24, 3, 4, 10, 0.3, 7));

  CHECK(aot::max_abs_diff(aot::closed_form_state(batch, model, 0, 0.5, 0.8), batch.z) <= 1e-12);
  CHECK(aot::max_abs_diff(aot::closed_form_state(batch, model, 5, 0.0, 0.8), batch.z) <= 1e-12);

  const Matrix z3 = aot::closed_form_state(batch, model, 3, 0.5, 0.8);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto r = batch.cluster(k);
    const double num = aot::frobenius_norm(aot::project(model.basis(k), z3.columns(r.begin, r.count)));
    const double den =
        aot::frobenius_norm(aot::project(model.basis(k), batch.z.columns(r.begin, r.count)));
    CHECK(std::abs(num / den - 2.744) <= 1e-9);
  }

  // One-step recursion: state(l+1) - state(l) = eta tau * signal part of state(l).
  for (std::size_t l = 0; l < 4; ++l) {
    const Matrix s0 = aot::closed_form_state(batch, model, l, 0.5, 0.8);
    const Matrix s1 = aot::closed_form_state(batch, model, l + 1, 0.5, 0.8);
    Matrix signal(24, 30);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto r = batch.cluster(k);
      signal.set_columns(r.begin, aot::project(model.basis(k), s0.columns(r.begin, r.count)));
    }
    const Matrix diff = (s1 - s0) - 0.4 * signal;
    CHECK(aot::frobenius_norm(diff) <= 1e-9 * aot::frobenius_norm(s1 - s0));
  }

  aot::TokenBatch bare = batch;
  bare.latents.reset();
  CHECK_THROWS_AS(aot::closed_form_state(bare, model, 1, 0.5, 0.8), aot::OracleUnavailableError);
}
