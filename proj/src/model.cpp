#include "lockscale/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "lockscale/errors.hpp"

namespace lockscale::model {

namespace {

// Weights above this are rescaled by an exact power of two.
constexpr double kRescaleAbove = 0x1.0p+600;
constexpr int kRescaleExponent = -600;

CurvePoint evaluate_point(double s, double a, std::uint32_t n) {
  const ModelParams params{n, s, a};
  const StateDistribution dist = state_probabilities(params);
  return CurvePoint{n, throughput(params, dist), expected_queue_length(dist)};
}

void validate_curve_args(double s, double a, std::uint32_t n_max) {
  if (n_max < 1) throw InvalidParameter("n_max must be at least 1");
  ModelParams{n_max, s, a}.validate();
}

}  // namespace

void ModelParams::validate() const {
  if (n < 1 || n > kMaxCores) {
    throw InvalidParameter("core count must be in [1, " + std::to_string(kMaxCores) +
                           "], got " + std::to_string(n));
  }
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidParameter("service time must be positive");
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidParameter("think time must be positive");
}

StateDistribution::StateDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvalidParameter("state distribution needs at least one state");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw InvalidParameter("state probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidParameter("state probabilities must sum to 1");
  }
}

StateDistribution state_probabilities(const ModelParams& params) {
  params.validate();
  const std::uint32_t n = params.n;
  const double ratio = params.s / params.a;

  std::vector<double> w(n + 1);
  w[0] = 1.0;
  for (std::uint32_t k = 0; k < n; ++k) {
    w[k + 1] = w[k] * static_cast<double>(n - k) * ratio;
    if (w[k + 1] > kRescaleAbove) {
      for (std::uint32_t i = 0; i <= k + 1; ++i) w[i] = std::ldexp(w[i], kRescaleExponent);
    }
  }

  // Sum smallest-first for accuracy; the weights are unimodal.
  double total = 0.0;
  {
    std::vector<double> sorted = w;
    std::sort(sorted.begin(), sorted.end());
    for (double x : sorted) total += x;
  }
  for (double& x : w) x /= total;
  return StateDistribution(std::move(w));
}

double expected_queue_length(const StateDistribution& dist) {
  const auto p = dist.probs();
  double w = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) w += static_cast<double>(i) * p[i];
  return w;
}

double throughput(const ModelParams& params, const StateDistribution& dist) {
  const auto p = dist.probs();
  double busy = 0.0;
  for (std::size_t i = p.size() - 1; i >= 1; --i) busy += p[i];
  return busy / params.s;
}

double throughput(const ModelParams& params) {
  return throughput(params, state_probabilities(params));
}

std::vector<CurvePoint> predict_curve_serial(double s, double a, std::uint32_t n_max) {
  validate_curve_args(s, a, n_max);
  std::vector<CurvePoint> curve(n_max);
  for (std::uint32_t n = 1; n <= n_max; ++n) curve[n - 1] = evaluate_point(s, a, n);
  return curve;
}

std::vector<CurvePoint> predict_curve(double s, double a, std::uint32_t n_max) {
  validate_curve_args(s, a, n_max);
  std::vector<CurvePoint> curve(n_max);
  const auto count = static_cast<std::int64_t>(n_max);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < count; ++i) {
    curve[i] = evaluate_point(s, a, static_cast<std::uint32_t>(i + 1));
  }
  return curve;
}

Envelope predict_envelope(double s_low, double s_high, double a, std::uint32_t n_max) {
  if (!(s_low <= s_high)) throw InvalidParameter("envelope needs s_low <= s_high");
  return Envelope{predict_curve(s_low, a, n_max), predict_curve(s_high, a, n_max)};
}

}  // namespace lockscale::model
