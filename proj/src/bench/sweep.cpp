#include <cmath>
#include <numeric>
#include <sstream>

#include "sealflow/bench/bench.hpp"
#include "sealflow/error.hpp"
#include "sealflow/stats.hpp"

namespace sealflow::bench {

std::vector<ChunkSweepRow> sweep_chunk(const std::vector<std::uint64_t>& sizes, std::uint64_t total_bytes,
                                       const enclave::CostModel& model) {
  enclave::TransformRegistry empty;
  enclave::EnclaveConfig config;
  config.crossing_cost = model;
  config.key = enclave::Key::random();
  auto session = enclave::EnclaveSession::create(config, empty);

  std::vector<ChunkSweepRow> rows;
  for (std::uint64_t chunk : sizes) {
    if (chunk == 0) fail(Errc::InvalidScale, "chunk size 0");
    ChunkSweepRow r;
    r.chunk = chunk;
    r.calls = (total_bytes + chunk - 1) / chunk;
    r.modeled_in_ns = enclave::transfer_time(model, total_bytes, chunk, enclave::Direction::In).count();
    r.modeled_inout_ns = enclave::transfer_time(model, total_bytes, chunk, enclave::Direction::InOut).count();
    const Bytes buf(std::min<std::uint64_t>(chunk, total_bytes), 0x5a);
    const auto t0 = SteadyClock::now();
    for (std::uint64_t left = total_bytes; left > 0;) {
      const std::uint64_t n = std::min(left, chunk);
      session.ecall_copy(ByteView(buf.data(), n), enclave::Direction::In);
      left -= n;
    }
    r.measured_ns = std::chrono::duration<double, std::nano>(SteadyClock::now() - t0).count();
    rows.push_back(r);
  }
  return rows;
}

std::string chunk_sweep_csv(const std::vector<ChunkSweepRow>& rows) {
  std::ostringstream out;
  out << "chunk_bytes,calls,modeled_in_ms,modeled_inout_ms,measured_copy_ms\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& r : rows)
    out << r.chunk << ',' << r.calls << ',' << r.modeled_in_ns / 1e6 << ',' << r.modeled_inout_ns / 1e6 << ','
        << r.measured_ns / 1e6 << '\n';
  return out.str();
}

std::vector<ScaleSweepRow> scale_sweep(const std::string& csv_path, const pipeline::PipelineSpec& spec,
                                       const std::string& stage, const std::vector<std::size_t>& counts, int reps,
                                       const pipeline::LaunchOptions& options) {
  if (reps < 1) fail(Errc::InvalidScale, "need at least one repetition");
  if (!stage.empty()) {
    const auto* st = spec.find(stage);
    if (!st) fail(Errc::UnknownStage, "no stage named '" + stage + "'");
    if (st->role == pipeline::Role::Source) fail(Errc::CannotScaleSource, stage + " is a source");
  }
  std::vector<ScaleSweepRow> rows;
  for (std::size_t count : counts) {
    if (count < 1) fail(Errc::InvalidScale, "worker count must be >= 1");
    pipeline::PipelineSpec s = spec;
    for (auto& st : s.stages)
      if ((stage.empty() && st.runs_transform()) || st.name == stage) st.workers = count;
    ScaleSweepRow row;
    row.workers = count;
    for (int r = 0; r < reps; ++r) {
      auto run = pipeline_delayed_flights(csv_path, s, options);
      row.runs_s.push_back(std::chrono::duration<double>(run.report.completion_time).count());
    }
    const double n = static_cast<double>(row.runs_s.size());
    row.mean_s = std::accumulate(row.runs_s.begin(), row.runs_s.end(), 0.0) / n;
    double sq = 0;
    for (double x : row.runs_s) sq += (x - row.mean_s) * (x - row.mean_s);
    row.stddev_s = row.runs_s.size() > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string scale_sweep_csv(const std::vector<ScaleSweepRow>& rows) {
  std::ostringstream out;
  out << "workers,mean_s,stddev_s,runs\n";
  out.precision(4);
  out << std::fixed;
  for (const auto& r : rows) out << r.workers << ',' << r.mean_s << ',' << r.stddev_s << ',' << r.runs_s.size() << '\n';
  return out.str();
}

}  // namespace sealflow::bench
