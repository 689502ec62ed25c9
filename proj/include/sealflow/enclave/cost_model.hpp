#pragma once

#include <chrono>
#include <cstdint>

namespace sealflow::enclave {

using SimDuration = std::chrono::duration<double, std::nano>;

/// Price of crossing the enclave boundary.
///
/// One call moving `b` bytes in costs
///   per_call_overhead * max(1, b / plateau_chunk) + b * per_byte_copy
/// and copying the result back out adds `copy_back_factor` of the copy term.
/// Below the plateau chunk every call pays the full transition; above it the
/// transfer proceeds in plateau-sized segments, so enlarging chunks past the
/// plateau stops reducing the total.
struct CostModel {
  std::chrono::nanoseconds per_call_overhead{10'000};
  double per_byte_copy_ns = 0.5;
  std::uint64_t plateau_chunk = 64 * 1024;
  double copy_back_factor = 0.2;
};

enum class Direction { In, InOut };

SimDuration crossing_time(const CostModel& model, std::uint64_t bytes, Direction direction);

/// Cost of copying `bytes` of results back across the boundary after a call.
SimDuration copy_back_time(const CostModel& model, std::uint64_t bytes);

/// Total crossing time to move `total_bytes` in calls of at most `chunk` bytes.
SimDuration transfer_time(const CostModel& model, std::uint64_t total_bytes, std::uint64_t chunk,
                          Direction direction);

}  // namespace sealflow::enclave
