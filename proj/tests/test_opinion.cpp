#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "era/opinion.hpp"
#include "era/rng.hpp"

using namespace era;

TEST_CASE("zero evidence gives the vacuous opinion") {
  auto op = opinion_from_evidence(Evidence({0.0, 0.0, 0.0, 0.0}));
  CHECK(op.uncertainty == doctest::Approx(1.0).epsilon(1e-15));
  for (double b : op.belief) CHECK(b == 0.0);
  for (double a : op.alpha) CHECK(a == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(op.strength == doctest::Approx(4.0).epsilon(1e-15));
  auto p = predictive_mean(op);
  for (double v : p.p) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("hand-computed opinion") {
  // e = (4, 0, 0, 0): S = 8, b = (0.5, 0, 0, 0), u = 0.5
  auto op = opinion_from_evidence(Evidence({4.0, 0.0, 0.0, 0.0}));
  CHECK(op.belief[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(op.uncertainty == doctest::Approx(0.5).epsilon(1e-15));
  auto p = predictive_mean(op);
  CHECK(p.p[0] == doctest::Approx(5.0 / 8.0).epsilon(1e-15));
  CHECK(p.p[1] == doctest::Approx(1.0 / 8.0).epsilon(1e-15));
}

TEST_CASE("conservation sum(b) + u = 1 over 10k random opinions") {
  Rng rng(derive_seed(7, "test.opinion.conservation"));
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> e(kNumQuadrants);
    for (double& v : e) {
      // cover tiny through huge evidence magnitudes
      v = std::exp(rng.uniform(-8.0, 8.0));
    }
    auto op = opinion_from_evidence(Evidence(std::move(e)));
    double total = op.uncertainty;
    for (double b : op.belief) {
      CHECK(b >= 0.0);
      total += b;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(op.uncertainty > 0.0);
    CHECK(op.uncertainty <= 1.0);

    auto p = predictive_mean(op);
    double psum = 0.0;
    for (double v : p.p) psum += v;
    CHECK(std::abs(psum - 1.0) <= 1e-12);
  }
}

TEST_CASE("uncertainty shrinks as evidence grows") {
  double prev = 1.0;
  for (double scale : {1.0, 10.0, 100.0, 1000.0}) {
    auto op = opinion_from_evidence(Evidence({scale, scale / 2.0, 0.0, scale / 3.0}));
    CHECK(op.uncertainty < prev);
    prev = op.uncertainty;
  }
}

TEST_CASE("evidence_from_logits applies softplus elementwise") {
  std::vector<double> z = {0.0, -100.0, 100.0, 1.0};
  auto ev = evidence_from_logits(z);
  CHECK(ev.e[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ev.e[1] >= 0.0);
  CHECK(ev.e[1] < 1e-10);
  CHECK(ev.e[2] == doctest::Approx(100.0).epsilon(1e-12));
  auto op = opinion_from_evidence(ev);
  CHECK(op.alpha[0] == doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("invalid evidence is rejected") {
  CHECK_THROWS_AS(Evidence({}), std::invalid_argument);
  CHECK_THROWS_AS(Evidence({1.0, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(Evidence({std::numeric_limits<double>::quiet_NaN()}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Evidence({std::numeric_limits<double>::infinity()}),
                  std::invalid_argument);
}
