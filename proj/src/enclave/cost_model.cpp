#include "sealflow/enclave/cost_model.hpp"

#include <algorithm>

namespace sealflow::enclave {

SimDuration crossing_time(const CostModel& model, std::uint64_t bytes, Direction direction) {
  const double segments =
      model.plateau_chunk == 0 ? 1.0
                               : std::max(1.0, static_cast<double>(bytes) / static_cast<double>(model.plateau_chunk));
  const double copy = static_cast<double>(bytes) * model.per_byte_copy_ns;
  const double factor = direction == Direction::InOut ? 1.0 + model.copy_back_factor : 1.0;
  return SimDuration(static_cast<double>(model.per_call_overhead.count()) * segments + copy * factor);
}

SimDuration copy_back_time(const CostModel& model, std::uint64_t bytes) {
  return SimDuration(static_cast<double>(bytes) * model.per_byte_copy_ns * model.copy_back_factor);
}

SimDuration transfer_time(const CostModel& model, std::uint64_t total_bytes, std::uint64_t chunk,
                          Direction direction) {
  if (chunk == 0) chunk = 1;
  const std::uint64_t full = total_bytes / chunk;
  const std::uint64_t rest = total_bytes % chunk;
  SimDuration total = crossing_time(model, chunk, direction) * static_cast<double>(full);
  if (rest > 0 || total_bytes == 0) total += crossing_time(model, rest, direction);
  return total;
}

}  // namespace sealflow::enclave
