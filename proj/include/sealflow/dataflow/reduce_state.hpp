#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sealflow/bytes.hpp"

namespace sealflow::dataflow {

/// Count and sum folded for one key.
struct Accumulator {
  std::int64_t count = 0;
  double sum = 0.0;

  void add(double value) {
    ++count;
    sum += value;
  }
  void merge(const Accumulator& other) {
    count += other.count;
    sum += other.sum;
  }
  friend bool operator==(const Accumulator&, const Accumulator&) = default;
};

/// Keyed reducer accumulator. Partial states from several reducers combine by
/// component-wise addition, so any partition of the input folds to the same
/// counts (and sums up to floating-point reassociation).
class ReduceState {
 public:
  void add(const std::string& key, double value) { entries_[key].add(value); }
  void merge(const ReduceState& other);

  const std::map<std::string, Accumulator>& entries() const noexcept { return entries_; }
  std::map<std::string, Accumulator>& entries() noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  /// Approximate resident size, charged against an enclave budget.
  std::size_t footprint() const noexcept;

  Bytes encode() const;
  static ReduceState decode(ByteView bytes);

  friend bool operator==(const ReduceState&, const ReduceState&) = default;

 private:
  std::map<std::string, Accumulator> entries_;
};

}  // namespace sealflow::dataflow
