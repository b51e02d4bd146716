#include "lockscale/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lockscale/errors.hpp"

namespace lockscale::cli {

namespace {

void check_text_cell(std::string_view text, std::string_view what) {
  if (text.find_first_of(",\"\r\n") != std::string_view::npos) {
    throw InvalidParameter(std::string(what) + " may not contain commas, quotes or newlines");
  }
}

template <class T>
std::string cell(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return format_number(*v);
  } else {
    return std::to_string(*v);
  }
}

template <class T>
std::optional<T> parse_cell(std::string_view text, std::string_view column) {
  if (text.empty()) return std::nullopt;
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidParameter("malformed " + std::string(column) + " cell: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

CsvRow& CsvRow::flag(std::string_view key, std::string_view value) {
  check_text_cell(key, "flag");
  check_text_cell(value, "flag");
  if (!flags.empty()) flags += ';';
  flags += key;
  if (!value.empty()) {
    flags += '=';
    flags += value;
  }
  return *this;
}

std::optional<std::string> CsvRow::flag_value(std::string_view key) const {
  if (flags.empty()) return std::nullopt;
  for (auto token : split(flags, ';')) {
    const auto eq = token.find('=');
    if (token.substr(0, eq) != key) continue;
    return eq == std::string_view::npos ? std::string() : std::string(token.substr(eq + 1));
  }
  return std::nullopt;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InvalidParameter("number not representable");
  return std::string(buf, ptr);
}

std::string header_line() {
  std::string line;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i) line += ',';
    line += kCsvColumns[i];
  }
  return line;
}

std::string format_row(const CsvRow& r) {
  check_text_cell(r.kind, "kind");
  check_text_cell(r.flags, "flags");
  std::ostringstream os;
  os << r.kind << ',' << cell(r.n) << ',' << cell(r.threads) << ',' << cell(r.mean_delay_cycles)
     << ',' << cell(r.service_cycles) << ',' << cell(r.throughput) << ','
     << cell(r.queue_length) << ',' << cell(r.ci95) << ',' << cell(r.seed) << ',' << r.flags;
  return os.str();
}

void write_csv(std::ostream& out, std::span<const CsvRow> rows) {
  out << header_line() << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
}

std::vector<CsvRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidParameter("CSV input is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header_line()) throw InvalidParameter("unexpected CSV header: " + line);

  std::vector<CsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != kCsvColumns.size()) {
      throw InvalidParameter("CSV line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(kCsvColumns.size()));
    }
    CsvRow r;
    r.kind = std::string(cells[0]);
    r.n = parse_cell<std::uint32_t>(cells[1], kCsvColumns[1]);
    r.threads = parse_cell<std::uint32_t>(cells[2], kCsvColumns[2]);
    r.mean_delay_cycles = parse_cell<double>(cells[3], kCsvColumns[3]);
    r.service_cycles = parse_cell<double>(cells[4], kCsvColumns[4]);
    r.throughput = parse_cell<double>(cells[5], kCsvColumns[5]);
    r.queue_length = parse_cell<double>(cells[6], kCsvColumns[6]);
    r.ci95 = parse_cell<double>(cells[7], kCsvColumns[7]);
    r.seed = parse_cell<std::uint64_t>(cells[8], kCsvColumns[8]);
    r.flags = std::string(cells[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CsvRow> read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open " + path);
  return parse_csv(in);
}

}  // namespace lockscale::cli
