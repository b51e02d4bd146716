#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lockscale/bench.hpp"
#include "lockscale/csv.hpp"
#include "lockscale/fit.hpp"
#include "lockscale/sim.hpp"

namespace lockscale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Name of the environment variable holding the default seed.
inline constexpr const char* kSeedEnv = "LOCKSCALE_SEED";

/// Seed from LOCKSCALE_SEED, or 1 when unset or unparsable.
std::uint64_t default_seed();

struct ModelOptions {
  std::optional<double> service;  ///< s; optional when an envelope is given
  double think = 2000.0;          ///< a
  std::uint32_t n_max = 28;
  std::optional<std::pair<double, double>> envelope;  ///< (s_low, s_high)
};

/// kind=model rows, n = 1..n_max, per curve. Envelope rows carry
/// `envelope=upper` or `envelope=lower`.
std::vector<CsvRow> cmd_model(const ModelOptions& opts);

struct SimulateOptions {
  sim::SimConfig base;  ///< n and a are overridden per row
  std::vector<double> delays{2000.0};
  std::vector<std::uint32_t> n_values;
};

/// kind=sim rows in delay-major order. Flags record the configuration, the
/// model prediction and the relative deviation from it.
std::vector<CsvRow> cmd_simulate(const SimulateOptions& opts);

/// kind=bench rows, throughput in completions per cycle.
std::vector<CsvRow> bench_rows(std::span<const bench::BenchResult> results);

struct FitOptions {
  std::optional<std::string> kind;
  std::optional<double> delay;
  std::optional<double> service;
  std::optional<double> fixed_a;
  std::optional<std::uint32_t> n_limit;
  bool relative = false;
};

/// Observations selected from CSV rows: rows of another kind than `fit`
/// with both n and throughput, passing the optional filters.
std::vector<fit::Observation> select_observations(std::span<const CsvRow> rows,
                                                  const FitOptions& opts);
fit::FitResult cmd_fit(std::span<const CsvRow> rows, const FitOptions& opts);
CsvRow fit_row(const fit::FitResult& result);
nlohmann::json fit_json(const fit::FitResult& result);

/// Runs the command line (arguments after the program name) and returns
/// the process exit code.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace lockscale::cli
