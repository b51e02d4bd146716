#pragma once

// Least-squares fit of the contention model to a throughput curve.
//
// The objective is the residual sum of squares between observed
// throughput and model throughput over the observed core counts. The
// search starts from the best point of a log-spaced grid and refines it by
// coordinate descent in log space, one golden-section line search per
// coordinate, until a full sweep moves every parameter by less than 1e-4
// relative.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace lockscale::fit {

struct Observation {
  std::uint32_t n = 0;
  double throughput = 0.0;  ///< completions per cycle
};

enum class Weighting {
  unweighted,  ///< residual = observed - model
  relative,    ///< residual = (observed - model) / observed
};

struct FitInput {
  std::vector<Observation> points;
  bool fit_a = true;
  double fixed_a = 2000.0;  ///< think time used when fit_a is false
  std::optional<std::uint32_t> n_limit;
  Weighting weighting = Weighting::unweighted;
};

struct FitResult {
  double s_hat = 0.0;
  double a_hat = 0.0;
  double rss = 0.0;        ///< objective value at (s_hat, a_hat)
  double r_squared = 0.0;  ///< 1 - RSS/TSS on unweighted residuals
  std::size_t points_used = 0;
  std::size_t iterations = 0;  ///< coordinate-descent sweeps
};

/// The search hit its iteration cap; best() is the best point found.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const char* what, FitResult best) : std::runtime_error(what), best_(best) {}
  const FitResult& best() const noexcept { return best_; }

 private:
  FitResult best_;
};

struct GridSpec {
  double s_low = 50.0;
  double s_high = 2000.0;
  double a_low = 100.0;
  double a_high = 64000.0;
  std::uint32_t steps = 64;  ///< per axis, log spaced, endpoints included
};

struct GridCandidate {
  double s = 0.0;
  double a = 0.0;
  double rss = 0.0;
};

inline constexpr int kMaxSweeps = 500;
inline constexpr double kRelativeStep = 1e-4;

/// Objective at (s, a).
double residual_sum(std::span<const Observation> points, double s, double a,
                    Weighting weighting = Weighting::unweighted);

/// Objective at every grid node, a-major when fit_a, otherwise a single row
/// at fixed_a. Evaluated with OpenMP; grid_scan_serial is the reference.
std::vector<GridCandidate> grid_scan(std::span<const Observation> points, const GridSpec& grid,
                                     bool fit_a, double fixed_a, Weighting weighting);
std::vector<GridCandidate> grid_scan_serial(std::span<const Observation> points,
                                            const GridSpec& grid, bool fit_a, double fixed_a,
                                            Weighting weighting);

/// Throws InvalidParameter for malformed input (fewer than three points
/// after the n limit, repeated n, non-positive throughput), DegenerateInput
/// when every throughput is equal, NonConvergence past kMaxSweeps.
FitResult fit_model(const FitInput& input, const GridSpec& grid = {});

/// 1 - RSS/TSS of curve against points, matched by n. Throws
/// InvalidParameter if the n values differ and DegenerateInput if TSS = 0.
double r_squared(std::span<const Observation> points, std::span<const Observation> curve);

}  // namespace lockscale::fit
