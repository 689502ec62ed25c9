#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>

#include "sealflow/bench/bench.hpp"
#include "sealflow/dataflow/builtins.hpp"
#include "sealflow/error.hpp"

namespace sealflow::bench {

namespace {

// Twenty carrier codes that appear in the 2005-2008 on-time data.
constexpr const char* kCarriers[] = {"AA", "AS", "B6", "CO", "DL", "EV", "F9", "FL", "HA", "MQ",
                                     "NW", "OH", "OO", "UA", "US", "WN", "XE", "YV", "9E", "AQ"};

std::string carrier_code(std::size_t i) {
  if (i < std::size(kCarriers)) return kCarriers[i];
  return "C" + std::to_string(i);
}

void append_int(std::string& out, std::int64_t v) {
  char buf[24];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::optional<std::int64_t> parse_number(const std::string& text) {
  if (text.empty() || text == "NA") return std::nullopt;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc{} && p == text.data() + text.size()) return v;
  double d = 0;
  auto [p2, ec2] = std::from_chars(text.data(), text.data() + text.size(), d);
  if (ec2 == std::errc{} && p2 == text.data() + text.size() && std::isfinite(d))
    return static_cast<std::int64_t>(std::llround(d));
  return std::nullopt;
}

}  // namespace

DatasetStats generate_dataset(const std::string& path, std::uint64_t rows, std::size_t carriers, std::uint64_t seed) {
  if (carriers < 1) fail(Errc::InvalidScale, "need at least one carrier");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write " + path);

  std::vector<std::string> codes;
  for (std::size_t i = 0; i < carriers; ++i) codes.push_back(carrier_code(i));

  std::mt19937_64 rng(seed);
  DatasetStats stats;
  std::string buf = std::string(kFlightHeader) + "\n";
  for (std::uint64_t r = 0; r < rows; ++r) {
    const std::string& carrier = codes[rng() % carriers];
    const std::int64_t year = 2005 + static_cast<std::int64_t>(rng() % 4);
    const std::int64_t month = 1 + static_cast<std::int64_t>(rng() % 12);
    const std::int64_t day = 1 + static_cast<std::int64_t>(rng() % 28);
    std::int64_t arr;
    if (rng() % 1000 < 400) {
      arr = 1 + static_cast<std::int64_t>(rng() % 180);
      ++stats.delayed;
    } else {
      arr = -static_cast<std::int64_t>(rng() % 40);
    }
    const std::int64_t dep = arr + static_cast<std::int64_t>(rng() % 21) - 10;
    buf += carrier;
    buf += ',';
    append_int(buf, year);
    buf += ',';
    append_int(buf, month);
    buf += ',';
    append_int(buf, day);
    buf += ',';
    append_int(buf, dep);
    buf += ',';
    append_int(buf, arr);
    buf += '\n';
    if (buf.size() > (1 << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(Errc::IoFailure, "write failed: " + path);
  stats.rows = rows;
  return stats;
}

IngestReport ingest_bts(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot read " + in_path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::UnknownLayout, in_path + ": empty file, no header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = dataflow::split_csv_line(line);
  if (!header) fail(Errc::UnknownLayout, in_path + ": unreadable header");

  // schema column -> accepted BTS spellings (lower case)
  const std::vector<std::pair<const char*, std::vector<std::string>>> aliases = {
      {"carrier", {"uniquecarrier", "reporting_airline", "op_unique_carrier", "op_carrier", "iata_code_reporting_airline",
                   "carrier"}},
      {"year", {"year"}},
      {"month", {"month"}},
      {"day", {"dayofmonth", "day_of_month", "day"}},
      {"dep_delay", {"depdelay", "dep_delay"}},
      {"arr_delay", {"arrdelay", "arr_delay"}},
  };
  std::vector<std::size_t> col;
  for (const auto& [name, names] : aliases) {
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < header->size() && !found; ++i)
      if (std::find(names.begin(), names.end(), lower((*header)[i])) != names.end()) found = i;
    if (!found) fail(Errc::UnknownLayout, in_path + ": no column for " + name);
    col.push_back(*found);
  }

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write " + out_path);
  out << kFlightHeader << '\n';
  IngestReport report;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = dataflow::split_csv_line(line);
    if (!fields || fields->size() < header->size()) {
      ++report.dropped;
      continue;
    }
    const std::string& carrier = (*fields)[col[0]];
    auto year = parse_number((*fields)[col[1]]);
    auto month = parse_number((*fields)[col[2]]);
    auto day = parse_number((*fields)[col[3]]);
    auto dep = parse_number((*fields)[col[4]]);
    auto arr = parse_number((*fields)[col[5]]);
    if (carrier.empty() || carrier.find(',') != std::string::npos || !year || !month || *month < 1 || *month > 12 ||
        !day || !arr) {
      ++report.dropped;
      continue;
    }
    out << carrier << ',' << *year << ',' << *month << ',' << *day << ',';
    if (dep) out << *dep;
    out << ',' << *arr << '\n';
    ++report.rows;
  }
  if (!out) fail(Errc::IoFailure, "write failed: " + out_path);
  return report;
}

}  // namespace sealflow::bench
