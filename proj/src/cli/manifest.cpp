#include "lockscale/manifest.hpp"

#include <ctime>
#include <fstream>

#include "lockscale/errors.hpp"

#ifndef LOCKSCALE_VERSION
#define LOCKSCALE_VERSION "0.0.0"
#endif

namespace lockscale::cli {

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["tool"] = "lockscale";
  j["version"] = m.version;
  j["subcommand"] = m.subcommand;
  j["args"] = m.args;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["timestamp"] = m.timestamp;
  j["host"] = {{"hardware_threads", m.hardware_threads},
               {"cycles_per_ns", m.cycles_per_ns ? nlohmann::json(*m.cycles_per_ns)
                                                 : nlohmann::json(nullptr)}};
  return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.subcommand = j.at("subcommand").get<std::string>();
    m.args = j.at("args").get<std::vector<std::string>>();
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.timestamp = j.at("timestamp").get<std::string>();
    const auto& host = j.at("host");
    m.hardware_threads = host.at("hardware_threads").get<unsigned>();
    if (!host.at("cycles_per_ns").is_null()) m.cycles_per_ns = host["cycles_per_ns"].get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write " + path);
  out << to_json(m).dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed manifest: ") + e.what());
  }
  return manifest_from_json(j);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string_view toolkit_version() noexcept { return LOCKSCALE_VERSION; }

}  // namespace lockscale::cli
