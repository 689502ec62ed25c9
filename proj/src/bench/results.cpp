#include <cmath>
#include <fstream>
#include <sstream>

#include "sealflow/bench/bench.hpp"
#include "sealflow/error.hpp"

namespace sealflow::bench {

extern const std::string_view kShippedPipeline;

std::optional<double> CarrierStats::mean_delay() const {
  if (delayed_count <= 0) return std::nullopt;
  return delay_sum / static_cast<double>(delayed_count);
}

CarrierStats DelayedFlights::lookup(const std::string& carrier) const {
  auto it = carriers.find(carrier);
  return it == carriers.end() ? CarrierStats{} : it->second;
}

std::int64_t DelayedFlights::total_delayed() const {
  std::int64_t n = 0;
  for (const auto& [_, s] : carriers) n += s.delayed_count;
  return n;
}

bool equivalent(const DelayedFlights& a, const DelayedFlights& b, double rel_tol, std::string* why) {
  auto explain = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.carriers.size() != b.carriers.size())
    return explain("carrier sets differ: " + std::to_string(a.carriers.size()) + " vs " +
                   std::to_string(b.carriers.size()));
  for (const auto& [carrier, x] : a.carriers) {
    auto it = b.carriers.find(carrier);
    if (it == b.carriers.end()) return explain("carrier " + carrier + " missing");
    const CarrierStats& y = it->second;
    if (x.delayed_count != y.delayed_count)
      return explain(carrier + ": count " + std::to_string(x.delayed_count) + " vs " + std::to_string(y.delayed_count));
    const double scale = std::max(std::abs(x.delay_sum), std::abs(y.delay_sum));
    if (std::abs(x.delay_sum - y.delay_sum) > rel_tol * scale)
      return explain(carrier + ": sum " + std::to_string(x.delay_sum) + " vs " + std::to_string(y.delay_sum));
  }
  return true;
}

DelayedFlights from_reduce_state(const dataflow::ReduceState& state) {
  DelayedFlights out;
  for (const auto& [key, acc] : state.entries()) out.carriers[key] = CarrierStats{acc.count, acc.sum};
  return out;
}

DelayedFlights oracle_delayed_flights(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot read " + csv_path);
  DelayedFlights out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    if (cols.size() != 6 || cols[0].empty()) continue;
    std::size_t used = 0;
    long long arr = 0;
    try {
      arr = std::stoll(cols[5], &used);
    } catch (const std::exception&) {
      continue;
    }
    if (used != cols[5].size()) continue;
    if (arr > 0) {
      CarrierStats& s = out.carriers[cols[0]];
      ++s.delayed_count;
      s.delay_sum += static_cast<double>(arr);
    }
  }
  return out;
}

pipeline::PipelineSpec delayed_flights_spec(pipeline::Mode mode) {
  pipeline::PipelineSpec spec = pipeline::parse_spec(kShippedPipeline, pipeline::default_registry());
  spec.mode = mode;
  return spec;
}

PipelineRun pipeline_delayed_flights(const std::string& csv_path, pipeline::PipelineSpec spec,
                                     pipeline::LaunchOptions options, std::size_t workers,
                                     std::chrono::milliseconds timeout) {
  if (workers > 0)
    for (auto& st : spec.stages)
      if (st.role == pipeline::Role::Worker || st.role == pipeline::Role::Sink) st.workers = workers;
  options.input = csv_path;
  pipeline::Deployment d = pipeline::launch(std::move(spec), std::move(options));
  PipelineRun run;
  run.report = d.await_completion(timeout);
  run.result = from_reduce_state(run.report.result);
  return run;
}

}  // namespace sealflow::bench
