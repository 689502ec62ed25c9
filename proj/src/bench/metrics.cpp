#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sealflow/bench/bench.hpp"
#include "sealflow/error.hpp"

namespace sealflow::bench {

std::uint64_t nearest_rank(std::vector<std::uint64_t> values, double p) {
  if (values.empty()) fail(Errc::NoSamples, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::vector<PercentileRow> collect_metrics(const std::string& stats_dir, const std::string& node_prefix) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(stats_dir)) fail(Errc::NoSamples, stats_dir + " is not a directory");

  // interval -> node -> bytes
  std::map<std::int64_t, std::map<std::string, std::uint64_t>> buckets;
  for (const auto& entry : fs::directory_iterator(stats_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    std::ifstream in(entry.path());
    std::string line;
    while (std::getline(in, line)) {
      std::stringstream ls(line);
      std::string ts, node, bytes;
      if (!std::getline(ls, ts, ',') || !std::getline(ls, node, ',') || !std::getline(ls, bytes)) continue;
      if (!node_prefix.empty() && node.rfind(node_prefix, 0) != 0) continue;
      try {
        buckets[std::stoll(ts) / 1000][node] += std::stoull(bytes);
      } catch (const std::exception&) {
        continue;  // header or junk
      }
    }
  }
  if (buckets.empty()) fail(Errc::NoSamples, "no throughput samples under " + stats_dir);

  std::vector<PercentileRow> rows;
  for (const auto& [interval, nodes] : buckets) {
    std::vector<std::uint64_t> v;
    for (const auto& [_, b] : nodes) v.push_back(b);
    PercentileRow r;
    r.interval = interval;
    r.min = nearest_rank(v, 0);
    r.p25 = nearest_rank(v, 25);
    r.p50 = nearest_rank(v, 50);
    r.p75 = nearest_rank(v, 75);
    r.max = nearest_rank(v, 100);
    rows.push_back(r);
  }
  return rows;
}

std::string percentile_csv(const std::vector<PercentileRow>& rows) {
  std::ostringstream out;
  out << "interval,min,p25,p50,p75,max\n";
  for (const auto& r : rows)
    out << r.interval << ',' << r.min << ',' << r.p25 << ',' << r.p50 << ',' << r.p75 << ',' << r.max << '\n';
  return out.str();
}

}  // namespace sealflow::bench
