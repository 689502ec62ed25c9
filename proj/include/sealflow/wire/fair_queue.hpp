#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

namespace sealflow::wire {

/// Per-source FIFO queues served in rotation: the scan for the next item starts
/// just after the source served last. Sources keep their index for life.
template <class T>
class FairQueue {
 public:
  std::size_t add_source() {
    queues_.emplace_back();
    return queues_.size() - 1;
  }

  void push(std::size_t source, T item) { queues_.at(source).push_back(std::move(item)); }

  std::optional<std::pair<std::size_t, T>> pop() {
    const std::size_t n = queues_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (next_ + k) % n;
      if (!queues_[i].empty()) {
        T item = std::move(queues_[i].front());
        queues_[i].pop_front();
        next_ = (i + 1) % n;
        return std::make_pair(i, std::move(item));
      }
    }
    return std::nullopt;
  }

  std::size_t sources() const noexcept { return queues_.size(); }
  std::size_t depth(std::size_t source) const { return queues_.at(source).size(); }
  bool empty() const noexcept {
    for (const auto& q : queues_)
      if (!q.empty()) return false;
    return true;
  }
  /// Index the next scan starts from.
  std::size_t cursor() const noexcept { return next_; }

 private:
  std::vector<std::deque<T>> queues_;
  std::size_t next_ = 0;
};

}  // namespace sealflow::wire
