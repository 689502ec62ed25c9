#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sealflow/dataflow/reduce_state.hpp"
#include "sealflow/pipeline/launcher.hpp"

namespace sealflow::bench {

inline constexpr const char* kFlightHeader = "carrier,year,month,day,dep_delay,arr_delay";

// ---------------------------------------------------------------- datasets

struct DatasetStats {
  std::uint64_t rows = 0;
  std::uint64_t delayed = 0;  // rows with arr_delay > 0
};

/// Writes a synthetic flight CSV. Every value comes from raw mt19937_64
/// outputs, so a seed gives the same bytes on any platform. About 40 % of
/// rows have arr_delay > 0.
DatasetStats generate_dataset(const std::string& path, std::uint64_t rows, std::size_t carriers, std::uint64_t seed);

struct IngestReport {
  std::uint64_t rows = 0;     // projected rows written
  std::uint64_t dropped = 0;  // malformed or missing arrival delay
};

/// Projects a BTS on-time-performance CSV to the flight schema. Columns are
/// found by header name (old and current BTS spellings), so their order does
/// not matter. UnknownLayout when a mandatory column is absent or the file has
/// no header.
IngestReport ingest_bts(const std::string& in_path, const std::string& out_path);

// ---------------------------------------------------------------- results

struct CarrierStats {
  std::int64_t delayed_count = 0;
  double delay_sum = 0.0;
  /// Defined only when delayed_count > 0.
  std::optional<double> mean_delay() const;
  friend bool operator==(const CarrierStats&, const CarrierStats&) = default;
};

/// Carriers with at least one delayed flight. Others read as zero.
struct DelayedFlights {
  std::map<std::string, CarrierStats> carriers;

  CarrierStats lookup(const std::string& carrier) const;
  std::int64_t total_delayed() const;
  friend bool operator==(const DelayedFlights&, const DelayedFlights&) = default;
};

/// Counts equal and sums within `rel_tol` relative error, carrier by carrier.
bool equivalent(const DelayedFlights& a, const DelayedFlights& b, double rel_tol = 1e-9, std::string* why = nullptr);

DelayedFlights from_reduce_state(const dataflow::ReduceState& state);

/// Sequential reference: reads the CSV with a plain split-on-comma reader and
/// folds delayed rows (arr_delay > 0) per carrier. Rows without six fields or
/// with an unparsable delay are skipped.
DelayedFlights oracle_delayed_flights(const std::string& csv_path);

struct PipelineRun {
  DelayedFlights result;
  pipeline::PipelineReport report;
};

/// Launches `spec` on `csv_path` with `workers` per worker and sink stage (0:
/// keep the spec's counts) and waits for the result.
PipelineRun pipeline_delayed_flights(const std::string& csv_path, pipeline::PipelineSpec spec,
                                     pipeline::LaunchOptions options = {}, std::size_t workers = 0,
                                     std::chrono::milliseconds timeout = std::chrono::minutes(5));

/// The shipped delayed-flights topology with the given mode.
pipeline::PipelineSpec delayed_flights_spec(pipeline::Mode mode);

// ---------------------------------------------------------------- metrics

struct PercentileRow {
  std::int64_t interval = 0;  // seconds since run start
  std::uint64_t min = 0, p25 = 0, p50 = 0, p75 = 0, max = 0;
};

/// Nearest-rank percentile: the value at rank ceil(p/100 * N) of the sorted
/// sample, rank 1 for p = 0.
std::uint64_t nearest_rank(std::vector<std::uint64_t> sorted_or_not, double p);

/// Buckets every `timestamp_ms,node,bytes_out` line under `stats_dir` into
/// 1 s intervals and takes percentiles across nodes. Only files whose node
/// name starts with `node_prefix` count when it is non-empty. NoSamples when
/// nothing matched.
std::vector<PercentileRow> collect_metrics(const std::string& stats_dir, const std::string& node_prefix = "");

/// `interval,min,p25,p50,p75,max`
std::string percentile_csv(const std::vector<PercentileRow>& rows);

// ---------------------------------------------------------------- sweeps

struct ChunkSweepRow {
  std::uint64_t chunk = 0;
  std::uint64_t calls = 0;
  double modeled_in_ns = 0;     // total crossing time, input-only
  double modeled_inout_ns = 0;  // total crossing time, copy in and back
  double measured_ns = 0;       // wall time of the real copies through ecall_copy
};

/// Moves `total_bytes` through an enclave session in chunks of each size.
std::vector<ChunkSweepRow> sweep_chunk(const std::vector<std::uint64_t>& sizes, std::uint64_t total_bytes,
                                       const enclave::CostModel& model = {});
std::string chunk_sweep_csv(const std::vector<ChunkSweepRow>& rows);

struct ScaleSweepRow {
  std::size_t workers = 0;
  double mean_s = 0;
  double stddev_s = 0;
  std::vector<double> runs_s;
};

/// Runs the pipeline `reps` times per count with `stage` (or every worker and
/// sink stage when empty) set to that many workers.
std::vector<ScaleSweepRow> scale_sweep(const std::string& csv_path, const pipeline::PipelineSpec& spec,
                                       const std::string& stage, const std::vector<std::size_t>& counts, int reps,
                                       const pipeline::LaunchOptions& options);
std::string scale_sweep_csv(const std::vector<ScaleSweepRow>& rows);

}  // namespace sealflow::bench
