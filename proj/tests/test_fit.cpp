#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "lockscale/errors.hpp"
#include "lockscale/fit.hpp"
#include "lockscale/model.hpp"
#include "lockscale/rng.hpp"
#include "lockscale/sim.hpp"

using namespace lockscale;
using namespace lockscale::fit;

namespace {

std::vector<Observation> model_points(double s, double a, std::uint32_t n_max) {
  std::vector<Observation> pts;
  for (const auto& p : model::predict_curve_serial(s, a, n_max)) pts.push_back({p.cores, p.throughput});
  return pts;
}

double rel_err(double x, double ref) { return std::abs(x - ref) / ref; }

}  // namespace

TEST_CASE("noiseless model data is recovered") {
  FitInput in;
  in.points = model_points(358.0, 1999.0, 14);
  const auto r = fit_model(in);
  CHECK(rel_err(r.s_hat, 358.0) < 0.005);
  CHECK(rel_err(r.a_hat, 1999.0) < 0.005);
  CHECK(r.r_squared >= 0.9999);
  CHECK(r.r_squared <= 1.0);
  CHECK(r.points_used == 14);
  CHECK(r.iterations >= 1);
}

TEST_CASE("fixed think time fits s alone") {
  FitInput in;
  in.points = model_points(613.0, 4000.0, 20);
  in.fit_a = false;
  in.fixed_a = 4000.0;
  const auto r = fit_model(in);
  CHECK(rel_err(r.s_hat, 613.0) < 0.005);
  CHECK(r.a_hat == 4000.0);
}

TEST_CASE("n_limit drops points beyond the limit") {
  FitInput in;
  in.points = model_points(358.0, 1999.0, 28);
  in.n_limit = 14;
  const auto r = fit_model(in);
  CHECK(r.points_used == 14);
  CHECK(rel_err(r.s_hat, 358.0) < 0.005);
}

TEST_CASE("relative weighting also recovers noiseless data") {
  FitInput in;
  in.points = model_points(358.0, 1999.0, 14);
  in.weighting = Weighting::relative;
  const auto r = fit_model(in);
  CHECK(rel_err(r.s_hat, 358.0) < 0.005);
  CHECK(rel_err(r.a_hat, 1999.0) < 0.005);
}

TEST_CASE("simulated data at s=358, a=2000 is recovered") {
  std::vector<std::uint32_t> n(14);
  std::iota(n.begin(), n.end(), 1u);
  sim::SimConfig base;
  base.a = 2000.0;
  base.s = 358.0;
  base.seed = 2024;
  FitInput in;
  for (const auto& p : sim::sweep(base, n)) in.points.push_back({p.n, p.result.throughput});
  const auto r = fit_model(in);
  CHECK(rel_err(r.s_hat, 358.0) < 0.05);
  CHECK(r.r_squared >= 0.99);
}

TEST_CASE("degenerate and malformed input") {
  FitInput flat;
  flat.points = {{1, 0.001}, {2, 0.001}, {3, 0.001}, {4, 0.001}};
  CHECK_THROWS_AS(fit_model(flat), DegenerateInput);

  FitInput few;
  few.points = {{1, 0.001}, {2, 0.002}};
  CHECK_THROWS_AS(fit_model(few), InvalidParameter);

  FitInput repeated;
  repeated.points = {{1, 0.001}, {2, 0.002}, {2, 0.0021}, {3, 0.0025}};
  CHECK_THROWS_AS(fit_model(repeated), InvalidParameter);

  FitInput negative;
  negative.points = {{1, 0.001}, {2, -0.002}, {3, 0.0025}};
  CHECK_THROWS_AS(fit_model(negative), InvalidParameter);

  FitInput limited;
  limited.points = model_points(358.0, 1999.0, 10);
  limited.n_limit = 2;
  CHECK_THROWS_AS(fit_model(limited), InvalidParameter);

  FitInput ok;
  ok.points = model_points(358.0, 1999.0, 10);
  GridSpec bad;
  bad.steps = 1;
  CHECK_THROWS_AS(fit_model(ok, bad), InvalidParameter);
}

TEST_CASE("r_squared examples") {
  const std::vector<Observation> pts{{1, 1.0}, {2, 2.0}, {3, 3.0}};
  CHECK(r_squared(pts, pts) == 1.0);
  const std::vector<Observation> mean{{1, 2.0}, {2, 2.0}, {3, 2.0}};
  CHECK(r_squared(pts, mean) == 0.0);
  const std::vector<Observation> off{{1, 1.0}, {2, 2.0}, {3, 2.0}};
  CHECK(r_squared(pts, off) == 0.5);
  const std::vector<Observation> shuffled{{3, 2.0}, {1, 1.0}, {2, 2.0}};
  CHECK(r_squared(pts, shuffled) == 0.5);

  CHECK_THROWS_AS(r_squared(mean, pts), DegenerateInput);
  const std::vector<Observation> shorter{{1, 1.0}, {2, 2.0}};
  CHECK_THROWS_AS(r_squared(pts, shorter), InvalidParameter);
  const std::vector<Observation> other_n{{1, 1.0}, {2, 2.0}, {4, 3.0}};
  CHECK_THROWS_AS(r_squared(pts, other_n), InvalidParameter);
}

TEST_CASE("scale consistency across time units") {
  // Throughput per unit of 2 cycles is twice the per-cycle value.
  constexpr double kUnit = 2.0;
  FitInput cycles;
  cycles.points = model_points(358.0, 1999.0, 14);
  FitInput units = cycles;
  for (auto& p : units.points) p.throughput *= kUnit;
  const auto rc = fit_model(cycles);
  const auto ru = fit_model(units);
  CHECK(rel_err(ru.s_hat * kUnit, rc.s_hat) < 1e-3);
  CHECK(rel_err(ru.a_hat * kUnit, rc.a_hat) < 1e-3);
}

TEST_CASE("returned parameters beat every grid candidate") {
  Xoshiro256 rng(31);
  auto pts = model_points(500.0, 6000.0, 14);
  for (auto& p : pts) p.throughput *= 1.0 + 0.02 * rng.normal();
  FitInput in;
  in.points = pts;
  const auto r = fit_model(in);
  for (const auto& c : grid_scan_serial(pts, GridSpec{}, true, 0.0, Weighting::unweighted))
    REQUIRE(r.rss <= c.rss);
  CHECK(r.rss == doctest::Approx(residual_sum(pts, r.s_hat, r.a_hat)).epsilon(1e-12));
}

TEST_CASE("recovery under 2% multiplicative noise") {
  Xoshiro256 rng(8675309);
  const auto clean = model_points(358.0, 1999.0, 14);
  int within = 0;
  for (int trial = 0; trial < 100; ++trial) {
    FitInput in;
    in.points = clean;
    for (auto& p : in.points) p.throughput *= 1.0 + 0.02 * rng.normal();
    if (rel_err(fit_model(in).s_hat, 358.0) <= 0.10) ++within;
  }
  CHECK(within >= 95);
}

TEST_CASE("parallel grid scan equals the serial reference") {
  const auto pts = model_points(358.0, 1999.0, 14);
  for (bool fit_a : {true, false}) {
    for (auto w : {Weighting::unweighted, Weighting::relative}) {
      const auto par = grid_scan(pts, GridSpec{}, fit_a, 2000.0, w);
      const auto ser = grid_scan_serial(pts, GridSpec{}, fit_a, 2000.0, w);
      REQUIRE(par.size() == ser.size());
      CHECK(par.size() == (fit_a ? 64u * 64u : 64u));
      for (std::size_t i = 0; i < par.size(); ++i) {
        REQUIRE(par[i].s == ser[i].s);
        REQUIRE(par[i].a == ser[i].a);
        REQUIRE(par[i].rss == ser[i].rss);
      }
    }
  }
}

TEST_CASE("grid endpoints are included") {
  const auto pts = model_points(358.0, 1999.0, 5);
  const auto cells = grid_scan_serial(pts, GridSpec{}, true, 0.0, Weighting::unweighted);
  CHECK(cells.front().s == doctest::Approx(50.0));
  CHECK(cells.front().a == doctest::Approx(100.0));
  CHECK(cells.back().s == doctest::Approx(2000.0));
  CHECK(cells.back().a == doctest::Approx(64000.0));
}
