#pragma once

// The one CSV schema shared by every emitter:
//
//   kind,n,threads,mean_delay_cycles,service_cycles,throughput,queue_length,ci95,seed,flags
//
// kind is model | sim | bench | fit. Unused cells are empty. Numbers are
// written in shortest round-trip form, so parsing a file and writing it
// back reproduces it byte for byte. flags is a ';'-separated list of
// `key=value` or bare `key` tokens.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lockscale::cli {

inline constexpr std::array<std::string_view, 10> kCsvColumns = {
    "kind",       "n",    "threads", "mean_delay_cycles", "service_cycles",
    "throughput", "queue_length", "ci95", "seed",        "flags"};

struct CsvRow {
  std::string kind;
  std::optional<std::uint32_t> n;
  std::optional<std::uint32_t> threads;
  std::optional<double> mean_delay_cycles;
  std::optional<double> service_cycles;
  std::optional<double> throughput;
  std::optional<double> queue_length;
  std::optional<double> ci95;
  std::optional<std::uint64_t> seed;
  std::string flags;

  /// Appends a flag token, `key` or `key=value`.
  CsvRow& flag(std::string_view key, std::string_view value = {});
  /// Value of flag `key`, or nullopt if absent (empty string for bare flags).
  std::optional<std::string> flag_value(std::string_view key) const;

  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

/// Shortest decimal that parses back to exactly `v`.
std::string format_number(double v);

std::string header_line();
std::string format_row(const CsvRow& row);
void write_csv(std::ostream& out, std::span<const CsvRow> rows);

/// Parses a document produced by write_csv. Throws InvalidParameter on a
/// missing or different header, a wrong cell count, or a malformed number.
std::vector<CsvRow> parse_csv(std::istream& in);
std::vector<CsvRow> read_csv_file(const std::string& path);

}  // namespace lockscale::cli
