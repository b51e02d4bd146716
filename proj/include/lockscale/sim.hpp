#pragma once

// Discrete-event simulation of the closed system behind the contention
// model: n customers alternate between a think station and a lock. In
// single-server mode the lock is one FIFO server (a big lock); in
// infinite-server mode every customer is served at once, which is the
// no-contention limit of fine-grained locking or elision on disjoint data.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lockscale::sim {

enum class Distribution { exponential, deterministic };
enum class ServerMode { single_server, infinite_server };

std::string_view to_string(Distribution d) noexcept;
std::string_view to_string(ServerMode m) noexcept;
/// Throws InvalidParameter on unknown names.
Distribution parse_distribution(std::string_view name);
ServerMode parse_server_mode(std::string_view name);

/// Number of batches used for the batch-means confidence interval.
inline constexpr int kBatches = 20;

struct SimConfig {
  std::uint32_t n = 1;
  double a = 1.0;  ///< mean think time, cycles
  double s = 1.0;  ///< mean service time, cycles
  Distribution service_dist = Distribution::exponential;
  Distribution think_dist = Distribution::exponential;
  ServerMode mode = ServerMode::single_server;
  std::optional<std::uint64_t> warmup;  ///< cycles; defaults to 10% of sample
  std::uint64_t sample = 200'000'000;   ///< cycles
  std::uint64_t seed = 1;

  void validate() const;
  std::uint64_t effective_warmup() const noexcept;
};

struct SimResult {
  double throughput = 0.0;         ///< completions per cycle in the sample window
  double mean_queue_length = 0.0;  ///< time-average customers at the lock
  double utilization = 0.0;        ///< fraction of the window with service in progress
  double ci95_throughput = 0.0;    ///< batch-means half-width
  std::uint64_t completions = 0;
  double mean_response = 0.0;      ///< arrival-to-departure time at the lock
  /// |L - X R| / L, the Little's-law residual of the window statistics.
  double little_law_error = 0.0;

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

SimResult run(const SimConfig& config);

struct SweepPoint {
  std::uint32_t n = 0;
  SimResult result;
  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

/// Seed used for the run at core count n inside a sweep.
std::uint64_t sweep_seed(std::uint64_t base_seed, std::uint32_t n) noexcept;

/// One run per n, ordered as given, each on its own derived seed. Runs are
/// distributed over OpenMP threads; sweep_serial is the reference and
/// returns identical results.
std::vector<SweepPoint> sweep(const SimConfig& base, std::span<const std::uint32_t> n_values);
std::vector<SweepPoint> sweep_serial(const SimConfig& base,
                                     std::span<const std::uint32_t> n_values);

}  // namespace lockscale::sim
