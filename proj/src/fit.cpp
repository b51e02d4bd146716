#include "lockscale/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "lockscale/errors.hpp"
#include "lockscale/model.hpp"

namespace lockscale::fit {

namespace {

constexpr double kInvPhi = 0.6180339887498948482;
constexpr double kLineTolerance = 1e-8;  // in log units

double log_node(double lo, double hi, std::uint32_t i, std::uint32_t steps) {
  if (steps == 1) return lo;
  const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
  return std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
}

double total_sum_squares(std::span<const Observation> points) {
  double mean = 0.0;
  for (const auto& p : points) mean += p.throughput;
  mean /= static_cast<double>(points.size());
  double tss = 0.0;
  for (const auto& p : points) tss += (p.throughput - mean) * (p.throughput - mean);
  return tss;
}

std::vector<Observation> prepare(const FitInput& input) {
  std::vector<Observation> pts;
  std::set<std::uint32_t> seen;
  for (const auto& p : input.points) {
    if (p.n < 1) throw InvalidParameter("fit points need n >= 1");
    if (!seen.insert(p.n).second) throw InvalidParameter("fit points need distinct n values");
    if (!(p.throughput > 0.0) || !std::isfinite(p.throughput)) {
      throw InvalidParameter("fit points need positive throughput");
    }
    if (input.n_limit && p.n > *input.n_limit) continue;
    pts.push_back(p);
  }
  if (pts.size() < 3) throw InvalidParameter("fit needs at least three points");
  if (!input.fit_a && !(input.fixed_a > 0.0)) {
    throw InvalidParameter("fixed think time must be positive");
  }
  std::sort(pts.begin(), pts.end(), [](const auto& x, const auto& y) { return x.n < y.n; });
  const bool all_equal = std::all_of(pts.begin(), pts.end(), [&](const Observation& o) {
    return o.throughput == pts.front().throughput;
  });
  if (all_equal) throw DegenerateInput("all throughputs are equal; nothing to fit");
  return pts;
}

struct Point {
  double log_s;
  double log_a;
  double rss;
};

// Golden-section search of f over [lo, hi]. Returns the best abscissa
// evaluated and its value.
template <class F>
std::pair<double, double> golden_section(F&& f, double lo, double hi) {
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  double best_x = f1 <= f2 ? x1 : x2;
  double best_f = std::min(f1, f2);
  while (hi - lo > kLineTolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
      if (f1 < best_f) best_f = f1, best_x = x1;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
      if (f2 < best_f) best_f = f2, best_x = x2;
    }
  }
  return {best_x, best_f};
}

}  // namespace

double residual_sum(std::span<const Observation> points, double s, double a, Weighting weighting) {
  double rss = 0.0;
  for (const auto& p : points) {
    const double predicted = model::throughput(model::ModelParams{p.n, s, a});
    double r = p.throughput - predicted;
    if (weighting == Weighting::relative) r /= p.throughput;
    rss += r * r;
  }
  return rss;
}

std::vector<GridCandidate> grid_scan_serial(std::span<const Observation> points,
                                            const GridSpec& grid, bool fit_a, double fixed_a,
                                            Weighting weighting) {
  const std::uint32_t a_steps = fit_a ? grid.steps : 1;
  std::vector<GridCandidate> out(static_cast<std::size_t>(a_steps) * grid.steps);
  for (std::uint32_t ia = 0; ia < a_steps; ++ia) {
    const double a = fit_a ? log_node(grid.a_low, grid.a_high, ia, grid.steps) : fixed_a;
    for (std::uint32_t is = 0; is < grid.steps; ++is) {
      const double s = log_node(grid.s_low, grid.s_high, is, grid.steps);
      out[static_cast<std::size_t>(ia) * grid.steps + is] =
          GridCandidate{s, a, residual_sum(points, s, a, weighting)};
    }
  }
  return out;
}

std::vector<GridCandidate> grid_scan(std::span<const Observation> points, const GridSpec& grid,
                                     bool fit_a, double fixed_a, Weighting weighting) {
  const std::uint32_t a_steps = fit_a ? grid.steps : 1;
  const auto cells = static_cast<std::int64_t>(a_steps) * grid.steps;
  std::vector<GridCandidate> out(static_cast<std::size_t>(cells));
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < cells; ++c) {
    const auto ia = static_cast<std::uint32_t>(c / grid.steps);
    const auto is = static_cast<std::uint32_t>(c % grid.steps);
    const double a = fit_a ? log_node(grid.a_low, grid.a_high, ia, grid.steps) : fixed_a;
    const double s = log_node(grid.s_low, grid.s_high, is, grid.steps);
    out[c] = GridCandidate{s, a, residual_sum(points, s, a, weighting)};
  }
  return out;
}

FitResult fit_model(const FitInput& input, const GridSpec& grid) {
  if (grid.steps < 2 || !(grid.s_low > 0.0) || !(grid.s_high > grid.s_low) ||
      !(grid.a_low > 0.0) || !(grid.a_high > grid.a_low)) {
    throw InvalidParameter("malformed fit grid");
  }
  const std::vector<Observation> pts = prepare(input);
  const double tss = total_sum_squares(pts);

  const auto candidates = grid_scan(pts, grid, input.fit_a, input.fixed_a, input.weighting);
  const auto best_cell = std::min_element(
      candidates.begin(), candidates.end(),
      [](const GridCandidate& x, const GridCandidate& y) { return x.rss < y.rss; });

  Point best{std::log(best_cell->s), std::log(best_cell->a), best_cell->rss};
  const double s_step = std::log(grid.s_high / grid.s_low) / (grid.steps - 1);
  const double a_step = std::log(grid.a_high / grid.a_low) / (grid.steps - 1);

  auto objective = [&](double log_s, double log_a) {
    return residual_sum(pts, std::exp(log_s), std::exp(log_a), input.weighting);
  };

  auto finish = [&](std::size_t sweeps) {
    FitResult r;
    r.s_hat = std::exp(best.log_s);
    r.a_hat = input.fit_a ? std::exp(best.log_a) : input.fixed_a;
    r.rss = best.rss;
    r.r_squared = 1.0 - residual_sum(pts, r.s_hat, r.a_hat, Weighting::unweighted) / tss;
    r.points_used = pts.size();
    r.iterations = sweeps;
    return r;
  };

  for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
    const Point before = best;

    {
      const auto [x, f] = golden_section([&](double ls) { return objective(ls, best.log_a); },
                                         best.log_s - s_step, best.log_s + s_step);
      if (f < best.rss) best = Point{x, best.log_a, f};
    }
    if (input.fit_a) {
      const auto [x, f] = golden_section([&](double la) { return objective(best.log_s, la); },
                                         best.log_a - a_step, best.log_a + a_step);
      if (f < best.rss) best = Point{best.log_s, x, f};
    }

    // Relative step of a parameter is |exp(dlog) - 1|.
    const double ds = std::abs(std::expm1(best.log_s - before.log_s));
    const double da = std::abs(std::expm1(best.log_a - before.log_a));
    if (ds < kRelativeStep && da < kRelativeStep) return finish(sweep);
  }
  throw NonConvergence("fit did not converge within the sweep limit", finish(kMaxSweeps));
}

double r_squared(std::span<const Observation> points, std::span<const Observation> curve) {
  if (points.size() != curve.size()) throw InvalidParameter("curve and points differ in length");
  if (points.empty()) throw InvalidParameter("r_squared needs at least one point");
  double rss = 0.0;
  for (const auto& p : points) {
    const auto it = std::find_if(curve.begin(), curve.end(),
                                 [&](const Observation& c) { return c.n == p.n; });
    if (it == curve.end()) throw InvalidParameter("curve lacks a point at n = " + std::to_string(p.n));
    rss += (p.throughput - it->throughput) * (p.throughput - it->throughput);
  }
  const double tss = total_sum_squares(points);
  if (tss == 0.0) throw DegenerateInput("points have zero variance");
  return 1.0 - rss / tss;
}

}  // namespace lockscale::fit
