#include "sealflow/stats.hpp"

#include "sealflow/error.hpp"

namespace sealflow {

ThroughputRecorder::ThroughputRecorder(const std::string& path, std::string node,
                                       SteadyClock::time_point epoch,
                                       std::chrono::milliseconds interval)
    : out_(path, std::ios::out | std::ios::trunc), node_(std::move(node)), epoch_(epoch),
      interval_(interval) {
  if (!out_) fail(Errc::IoFailure, "cannot open stats file " + path);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - epoch_);
  current_ = elapsed.count() / interval_.count();
}

ThroughputRecorder::~ThroughputRecorder() { finish(); }

void ThroughputRecorder::roll_to(std::int64_t index) {
  while (current_ < index) {
    out_ << current_ * interval_.count() << ',' << node_ << ',' << bytes_ << '\n';
    bytes_ = 0;
    ++current_;
  }
}

void ThroughputRecorder::add(std::uint64_t bytes) {
  if (!enabled()) return;
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - epoch_);
  roll_to(elapsed.count() / interval_.count());
  bytes_ += bytes;
}

void ThroughputRecorder::finish() {
  if (!enabled()) return;
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - epoch_);
  roll_to(elapsed.count() / interval_.count());
  out_ << current_ * interval_.count() << ',' << node_ << ',' << bytes_ << '\n';
  out_.close();
}

}  // namespace sealflow
