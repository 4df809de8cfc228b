#include <cmath>
#include <vector>

#include "doctest.h"

#include "aot/lemmas.hpp"
#include "aot/verify.hpp"

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

}  // namespace

TEST_CASE("binomial slack") {
  CHECK(aot::binomial_slack(0.5, 100) == doctest::Approx(0.15));
  CHECK(aot::binomial_slack(1.0, 100) == 0.0);
  CHECK(aot::binomial_slack(-0.5, 100) == 0.0);
}

TEST_CASE("lemma A1") {
  const auto zero = aot::check_lemma_a1(32, 0.0, 1.0, 50, 1);
  CHECK(zero.at("norm_concentration").frequency == 1.0);
  CHECK(zero.at("norm_concentration").meets_floor);

  const auto r = aot::check_lemma_a1(64, 1.0, 3.0, 10000, 2);
  const auto& res = r.at("norm_concentration");
  CHECK(res.trials == 10000);
  CHECK(res.floor == doctest::Approx(1.0 - 2.0 * std::exp(-4.5)).epsilon(1e-14));
  CHECK(res.meets_floor);

  const auto vacuous = aot::check_lemma_a1(64, 1.0, 0.0, 200, 3);
  CHECK(vacuous.at("norm_concentration").floor < 0.0);
  CHECK(vacuous.at("norm_concentration").meets_floor);
}

TEST_CASE("lemma A2 without noise") {
  const auto r = aot::check_lemma_a2(mixture(256, 4, 64, 64, 0.0, 0), 5, 1);
  REQUIRE(r.results.size() == 8);
  CHECK(r.results.front().name == "signal_norm");
  CHECK(r.results.back().name == "noise_softmax");
  for (const char* name : {"noise_norm", "signal_noise_inner", "noise_inner"}) CHECK(r.at(name).frequency == 1.0);
  REQUIRE(r.conditions.size() == 3);
}

TEST_CASE("lemma A2 is deterministic and reports its regime") {
  const auto cfg = mixture(256, 4, 64, 64, 0.05, 0);
  const auto a = aot::check_lemma_a2(cfg, 4, 7);
  const auto b = aot::check_lemma_a2(cfg, 4, 7);
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    CHECK(a.results[i].satisfied == b.results[i].satisfied);
    CHECK(a.results[i].frequency >= 0.0);
    CHECK(a.results[i].frequency <= 1.0);
  }
  CHECK(a.N == 256);
  CHECK(a.log_base == doctest::Approx(std::exp(1.0)));
  const auto ten = aot::check_lemma_a2(cfg, 4, 7, 10.0);
  CHECK(ten.log_base == 10.0);
}

TEST_CASE("lemma A3 at theta = 1 is the layer-0 verifier check") {
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto model = aot::sample_bases(128, 4, 32, seed);
    const auto batch = aot::sample_tokens(model, mixture(128, 4, 32, 256, 0.05, seed));
    const auto a3 = aot::check_lemma_a3(model, batch, 1.0, 0.8);
    const auto v = aot::verify_theorem(model, batch, 1, 0.5, 0.8);
    CHECK((a3.at("all_heads").satisfied == 1) == static_cast<bool>(v.trace.pattern[0]));
  }
}

TEST_CASE("lemma A3 pass frequency does not drop as the signal grows") {
  std::vector<std::uint64_t> seeds(20);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = 100 + i;
  const auto cfg = mixture(128, 4, 32, 256, 0.05, 0);
  const auto one = aot::check_lemma_a3_sweep(cfg, 1.0, 0.8, seeds);
  const auto two = aot::check_lemma_a3_sweep(cfg, 2.0, 0.8, seeds);
  CHECK(two.at("all_heads").frequency >= one.at("all_heads").frequency);
  CHECK(one.at("all_heads").trials == 20);
}

TEST_CASE("lemma A3 single cluster against a scalar softmax oracle") {
  const double tau = 0.6;
  std::size_t seen_true = 0, seen_false = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto model = aot::sample_bases(3, 1, 3, seed);
    const auto batch = aot::sample_tokens(model, mixture(3, 1, 3, 4, 0.0, seed));
    const aot::Matrix& a = batch.latents->signal[0];

    bool expected = true;
    for (std::size_t j = 0; j < 4; ++j) {
      double logits[4], norm = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        logits[i] = a(0, i) * a(0, j) + a(1, i) * a(1, j) + a(2, i) * a(2, j);
        norm += std::exp(logits[i]);
      }
      expected = expected && std::exp(logits[j]) / norm > tau;
    }
    const auto r = aot::check_lemma_a3(model, batch, 1.0, tau);
    CHECK((r.at("head0").satisfied == 1) == expected);
    (expected ? seen_true : seen_false)++;
  }
  CHECK(seen_true > 0);
  CHECK(seen_false > 0);
}

TEST_CASE("lemma A3 errors") {
  const auto model = aot::sample_bases(16, 2, 4, 0);
  auto batch = aot::sample_tokens(model, mixture(16, 2, 4, 8, 0.1, 0));
  CHECK_THROWS_AS(aot::check_lemma_a3(model, batch, 0.5, 0.8), aot::ParameterError);
  batch.latents.reset();
  CHECK_THROWS_AS(aot::check_lemma_a3(model, batch, 1.0, 0.8), aot::OracleUnavailableError);
}
