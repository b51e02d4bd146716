#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lockscale::cli {

/// Record written next to every output file. `args` is the exact argument
/// list after the program name; replaying it reproduces the deterministic
/// subcommands (model, simulate, fit) bit for bit.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> args;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string version;
  std::string timestamp;  ///< UTC, ISO 8601
  unsigned hardware_threads = 0;
  std::optional<double> cycles_per_ns;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Toolkit version string.
std::string_view toolkit_version() noexcept;

}  // namespace lockscale::cli
