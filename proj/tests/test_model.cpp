#include <doctest.h>

#include <cmath>
#include <vector>

#include "lockscale/errors.hpp"
#include "lockscale/model.hpp"
#include "lockscale/rng.hpp"
#include "support/factorial_oracle.hpp"

using namespace lockscale;
using namespace lockscale::model;

namespace {

bool rel_close(double x, double y, double tol) {
  return std::abs(x - y) <= tol * std::max(std::abs(x), std::abs(y));
}

double log_uniform(Xoshiro256& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

}  // namespace

TEST_CASE("state probabilities: hand-computable cases") {
  SUBCASE("one core, s = a") {
    for (double v : {1.0, 358.0, 1e6}) {
      const auto d = state_probabilities({1, v, v});
      CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-15));
      CHECK(d[1] == doctest::Approx(0.5).epsilon(1e-15));
    }
  }
  SUBCASE("two cores, s = a") {
    const auto d = state_probabilities({2, 10.0, 10.0});
    CHECK(d[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(d[1] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(d[2] == doctest::Approx(0.4).epsilon(1e-15));
  }
}

TEST_CASE("state probabilities: n=4, s=300, a=4000 against exact rationals") {
  // Frozen from exact rational evaluation of the closed form.
  const double expected[] = {0.7254870398541771, 0.21764611195625314, 0.048970375190156956,
                             0.007345556278523543, 0.0005509167208892657};
  const auto d = state_probabilities({4, 300.0, 4000.0});
  REQUIRE(d.cores() == 4);
  const auto oracle = testing::factorial_probabilities(4, 300.0L, 4000.0L);
  for (int k = 0; k <= 4; ++k) {
    CHECK(rel_close(d[k], expected[k], 1e-12));
    CHECK(rel_close(d[k], static_cast<double>(oracle[k]), 1e-12));
  }
  CHECK(rel_close(expected_queue_length(d), 0.3398271980556947, 1e-12));
  CHECK(rel_close(throughput({4, 300.0, 4000.0}, d), 0.0009150432004860763, 1e-12));
}

TEST_CASE("expected queue length") {
  CHECK(expected_queue_length(StateDistribution({1.0})) == 0.0);
  CHECK(expected_queue_length(StateDistribution({0.5, 0.5})) == doctest::Approx(0.5));
}

TEST_CASE("throughput: closed forms and the fitted operating point") {
  SUBCASE("n = 1 equals 1/(a+s)") {
    for (double s : {1.0, 358.0}) {
      CHECK(rel_close(throughput({1, s, s}), 1.0 / (2.0 * s), 1e-15));
      CHECK(rel_close(throughput({1, s, 1999.0}), 1.0 / (1999.0 + s), 1e-15));
    }
  }
  SUBCASE("n = 2, s = a") { CHECK(rel_close(throughput({2, 7.0, 7.0}), 0.8 / 7.0, 1e-15)); }
  SUBCASE("n = 14, s = 358, a = 1999") {
    const double x = throughput({14, 358.0, 1999.0});
    CHECK(rel_close(x, 0.002789844536133097, 1e-12));
    CHECK(rel_close(x, static_cast<double>(testing::factorial_throughput(14, 358.0L, 1999.0L)), 1e-12));
    CHECK(x < 1.0 / 358.0);
  }
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(state_probabilities({0, 1.0, 1.0}), InvalidParameter);
  CHECK_THROWS_AS(state_probabilities({kMaxCores + 1, 1.0, 1.0}), InvalidParameter);
  CHECK_THROWS_AS(state_probabilities({3, 0.0, 1.0}), InvalidParameter);
  CHECK_THROWS_AS(state_probabilities({3, -2.0, 1.0}), InvalidParameter);
  CHECK_THROWS_AS(state_probabilities({3, 1.0, 0.0}), InvalidParameter);
  CHECK_THROWS_AS(state_probabilities({3, 1.0, NAN}), InvalidParameter);
  CHECK_THROWS_AS(predict_curve(1.0, 1.0, 0), InvalidParameter);
  CHECK_THROWS_AS(StateDistribution({}), InvalidParameter);
  CHECK_THROWS_AS(StateDistribution({0.5, 0.6}), InvalidParameter);
  CHECK_THROWS_AS(StateDistribution({1.5, -0.5}), InvalidParameter);
  CHECK_NOTHROW(state_probabilities({kMaxCores, 358.0, 2000.0}));
}

TEST_CASE("property: recurrence matches the factorial closed form for n <= 20") {
  Xoshiro256 rng(20240601);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::uint32_t>(1 + rng() % 20);
    const double s = log_uniform(rng, 1.0, 1e4);
    const double a = log_uniform(rng, 1.0, 1e5);
    const auto d = state_probabilities({n, s, a});
    const auto oracle = testing::factorial_probabilities(n, s, a);
    for (std::uint32_t k = 0; k <= n; ++k) {
      REQUIRE_MESSAGE(rel_close(d[k], static_cast<double>(oracle[k]), 1e-12),
                      "n=" << n << " s=" << s << " a=" << a << " k=" << k);
    }
  }
}

TEST_CASE("property: normalization and balance up to n = 1024") {
  Xoshiro256 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::uint32_t>(1 + rng() % 1024);
    const double s = log_uniform(rng, 1.0, 1e4);
    const double a = log_uniform(rng, 1.0, 1e5);
    const auto d = state_probabilities({n, s, a});
    double total = 0.0;
    for (double p : d.probs()) {
      REQUIRE(p >= 0.0);
      total += p;
    }
    REQUIRE(std::abs(total - 1.0) <= 1e-9);
    for (std::uint32_t k = 0; k < n; ++k) {
      const double up = d[k] * static_cast<double>(n - k) / a;
      const double down = d[k + 1] / s;
      if (up < 1e-280 || down < 1e-280) continue;  // underflowed tail
      REQUIRE_MESSAGE(rel_close(up, down, 1e-9), "n=" << n << " k=" << k);
    }
    const double w = expected_queue_length(d);
    REQUIRE(w >= 0.0);
    REQUIRE(w <= n);
  }
}

TEST_CASE("property: uncontended limit approaches n/(a+s)") {
  for (std::uint32_t n : {1u, 2u, 8u, 28u, 64u}) {
    for (double s : {10.0, 358.0}) {
      const double a = 1000.0 * n * s;
      const double x = throughput({n, s, a});
      CHECK(rel_close(x, n / (a + s), 0.01));
    }
  }
}

TEST_CASE("property: saturation is monotone and bounded by 1/s") {
  for (double a : {500.0, 2000.0, 32000.0}) {
    const auto curve = predict_curve_serial(358.0, a, 256);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      CHECK(curve[i].throughput > 0.0);
      // Rounding at saturation is allowed a few ulps.
      CHECK(curve[i].throughput <= (1.0 + 1e-14) / 358.0);
      CHECK(curve[i].queue_length >= 0.0);
      CHECK(curve[i].queue_length <= curve[i].cores);
      if (i > 0) CHECK(curve[i].throughput >= curve[i - 1].throughput * (1.0 - 1e-14));
    }
  }
}

TEST_CASE("predict_curve at the fitted operating point plateaus near 1/358") {
  const auto curve = predict_curve(358.0, 1999.0, 28);
  REQUIRE(curve.size() == 28);
  CHECK(curve.front().cores == 1);
  CHECK(curve.back().cores == 28);
  CHECK(curve.back().throughput <= (1.0 + 1e-14) / 358.0);
  CHECK(curve.back().throughput >= 0.999 / 358.0);
}

TEST_CASE("predict_curve with n_max = 1") {
  const auto curve = predict_curve(358.0, 1999.0, 1);
  REQUIRE(curve.size() == 1);
  CHECK(rel_close(curve[0].throughput, 1.0 / (1999.0 + 358.0), 1e-15));
}

TEST_CASE("envelope ordering: smaller service time dominates") {
  const auto env = predict_envelope(323.0, 613.0, 4000.0, 28);
  REQUIRE(env.upper.size() == 28);
  REQUIRE(env.lower.size() == 28);
  for (std::size_t i = 0; i < 28; ++i) CHECK(env.upper[i].throughput >= env.lower[i].throughput);
  CHECK_THROWS_AS(predict_envelope(613.0, 323.0, 4000.0, 28), InvalidParameter);

  Xoshiro256 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double s1 = log_uniform(rng, 10.0, 2000.0);
    const double s2 = s1 * (1.0 + rng.uniform());
    const double a = log_uniform(rng, 100.0, 64000.0);
    const auto hi = predict_curve(s1, a, 40);
    const auto lo = predict_curve(s2, a, 40);
    for (std::size_t i = 0; i < 40; ++i)
      REQUIRE(hi[i].throughput >= lo[i].throughput * (1.0 - 1e-14));
  }
}

TEST_CASE("parallel curve equals the serial reference") {
  for (double a : {500.0, 4000.0}) {
    const auto par = predict_curve(358.0, a, 300);
    const auto ser = predict_curve_serial(358.0, a, 300);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].cores == ser[i].cores);
      CHECK(par[i].throughput == ser[i].throughput);
      CHECK(par[i].queue_length == ser[i].queue_length);
    }
  }
}
