#pragma once

// Machine-repairman model of a single lock shared by n cores.
//
// State k counts the cores holding or waiting for the lock. Arrivals occur
// at rate (n - k) / a and the lock is serviced at rate 1 / s, so the
// steady state satisfies P_k (n - k) / a = P_{k+1} / s. All times are in
// abstract cycles.

#include <cstdint>
#include <span>
#include <vector>

namespace lockscale::model {

/// Largest core count accepted by the model.
inline constexpr std::uint32_t kMaxCores = 4096;

struct ModelParams {
  std::uint32_t n = 1;  ///< cores
  double s = 1.0;       ///< mean lock service (holding) time
  double a = 1.0;       ///< mean think time between requests of one core

  /// Throws InvalidParameter unless 1 <= n <= kMaxCores, s > 0, a > 0.
  void validate() const;
};

class StateDistribution {
 public:
  /// Takes ownership of P_0..P_n; throws InvalidParameter if the vector is
  /// empty, has a negative entry, or does not sum to 1 within 1e-9.
  explicit StateDistribution(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t k) const noexcept { return probs_[k]; }
  std::uint32_t cores() const noexcept { return static_cast<std::uint32_t>(probs_.size() - 1); }

 private:
  std::vector<double> probs_;
};

struct CurvePoint {
  std::uint32_t cores = 0;
  double throughput = 0.0;    ///< lock completions per cycle
  double queue_length = 0.0;  ///< expected cores holding or waiting
};

/// Steady-state probabilities P_0..P_n from the balance recurrence
/// P_{k+1} = P_k (n - k) s / a, normalised at the end. Intermediate
/// weights are rescaled by powers of two, so no factorial ever overflows.
StateDistribution state_probabilities(const ModelParams& params);

/// Sum of k P_k.
double expected_queue_length(const StateDistribution& dist);

/// (1 - P_0) / s. The busy probability is summed from P_1..P_n rather
/// than formed as 1 - P_0, which keeps full relative precision in the
/// uncontended regime.
double throughput(const ModelParams& params, const StateDistribution& dist);

/// Convenience: throughput of the model at (n, s, a).
double throughput(const ModelParams& params);

/// One CurvePoint per core count 1..n_max. Points are evaluated in
/// parallel; predict_curve_serial is the single-threaded reference.
std::vector<CurvePoint> predict_curve(double s, double a, std::uint32_t n_max);
std::vector<CurvePoint> predict_curve_serial(double s, double a, std::uint32_t n_max);

struct Envelope {
  std::vector<CurvePoint> upper;  ///< shorter service time
  std::vector<CurvePoint> lower;  ///< longer service time
};

/// Bound envelope for a service time that varies within [s_low, s_high].
Envelope predict_envelope(double s_low, double s_high, double a, std::uint32_t n_max);

}  // namespace lockscale::model
