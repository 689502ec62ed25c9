#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <string>

namespace sealflow {

using SteadyClock = std::chrono::steady_clock;

/// Appends `timestamp_ms,node,bytes_out` lines, one per elapsed 1 s interval,
/// to a per-node CSV file. Intervals with no traffic are written as 0 so every
/// live node contributes a sample to each interval. Single writer per file.
class ThroughputRecorder {
 public:
  ThroughputRecorder() = default;  // disabled
  ThroughputRecorder(const std::string& path, std::string node, SteadyClock::time_point epoch,
                     std::chrono::milliseconds interval = std::chrono::milliseconds{1000});
  ~ThroughputRecorder();
  ThroughputRecorder(ThroughputRecorder&&) = default;
  ThroughputRecorder& operator=(ThroughputRecorder&&) = default;

  bool enabled() const noexcept { return out_.is_open(); }
  void add(std::uint64_t bytes);
  /// Writes the current (possibly partial) interval and closes the file.
  void finish();

 private:
  void roll_to(std::int64_t interval_index);

  std::ofstream out_;
  std::string node_;
  SteadyClock::time_point epoch_{};
  std::chrono::milliseconds interval_{1000};
  std::int64_t current_ = 0;
  std::uint64_t bytes_ = 0;
};

}  // namespace sealflow
