#include "sealflow/dataflow/reduce_state.hpp"

#include <bit>

#include "sealflow/error.hpp"

namespace sealflow::dataflow {

void ReduceState::merge(const ReduceState& other) {
  for (const auto& [key, acc] : other.entries_) entries_[key].merge(acc);
}

std::size_t ReduceState::footprint() const noexcept {
  std::size_t bytes = sizeof(*this);
  for (const auto& [key, acc] : entries_) bytes += 64 + key.size() + sizeof(acc);
  return bytes;
}

Bytes ReduceState::encode() const {
  Bytes out;
  put_be32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [key, acc] : entries_) {
    put_be32(out, static_cast<std::uint32_t>(key.size()));
    out.insert(out.end(), key.begin(), key.end());
    put_be64(out, static_cast<std::uint64_t>(acc.count));
    put_be64(out, std::bit_cast<std::uint64_t>(acc.sum));
  }
  return out;
}

ReduceState ReduceState::decode(ByteView bytes) {
  ReduceState state;
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (bytes.size() - pos < n) fail(Errc::Codec, "reduce state truncated");
  };
  need(4);
  const std::uint32_t n = get_be32(bytes.data());
  pos = 4;
  for (std::uint32_t i = 0; i < n; ++i) {
    need(4);
    const std::uint32_t len = get_be32(bytes.data() + pos);
    pos += 4;
    need(len + 16);
    std::string key(reinterpret_cast<const char*>(bytes.data() + pos), len);
    pos += len;
    Accumulator acc;
    acc.count = static_cast<std::int64_t>(get_be64(bytes.data() + pos));
    acc.sum = std::bit_cast<double>(get_be64(bytes.data() + pos + 8));
    pos += 16;
    state.entries_.emplace(std::move(key), acc);
  }
  if (pos != bytes.size()) fail(Errc::Codec, "trailing bytes after reduce state");
  return state;
}

}  // namespace sealflow::dataflow
