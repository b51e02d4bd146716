#pragma once

// Direct evaluation of the closed-form state probabilities with exact
// factorials, for cross-checking the recurrence used by the library.
// Valid for n <= 20 (20! fits in 64 bits).

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lockscale::testing {

inline long double exact_factorial(unsigned k) {
  std::uint64_t f = 1;
  for (unsigned i = 2; i <= k; ++i) f *= i;
  return static_cast<long double>(f);
}

/// P_k = (s^k / (a^k (n-k)!)) / sum_i (s^i / (a^i (n-i)!)).
inline std::vector<long double> factorial_probabilities(unsigned n, long double s, long double a) {
  if (n > 20) throw std::invalid_argument("factorial oracle limited to n <= 20");
  std::vector<long double> terms(n + 1);
  long double total = 0.0L;
  long double power = 1.0L;  // (s/a)^k
  for (unsigned k = 0; k <= n; ++k) {
    terms[k] = power / exact_factorial(n - k);
    total += terms[k];
    power *= s / a;
  }
  for (auto& t : terms) t /= total;
  return terms;
}

inline long double factorial_throughput(unsigned n, long double s, long double a) {
  const auto p = factorial_probabilities(n, s, a);
  long double busy = 0.0L;
  for (unsigned k = 1; k <= n; ++k) busy += p[k];
  return busy / s;
}

inline long double factorial_queue_length(unsigned n, long double s, long double a) {
  const auto p = factorial_probabilities(n, s, a);
  long double w = 0.0L;
  for (unsigned k = 1; k <= n; ++k) w += k * p[k];
  return w;
}

}  // namespace lockscale::testing
