#include "sealflow/wire/frame.hpp"

#include <string>

#include "sealflow/error.hpp"

namespace sealflow::wire {

std::uint64_t encoded_size(std::uint64_t payload_bytes) {
  if (payload_bytes > kMaxPayload)
    fail(Errc::PayloadTooLarge, std::to_string(payload_bytes) + " byte payload");
  return kLengthPrefixBytes + kHeaderBytes + payload_bytes;
}

void encode_frame_into(const Frame& frame, Bytes& out) {
  // Exact reserve on a non-empty buffer would defeat geometric growth when
  // frames are appended back to back.
  if (out.empty()) out.reserve(encoded_size(frame.payload.size()));
  put_be32(out, static_cast<std::uint32_t>(kHeaderBytes + frame.payload.size()));
  put_be32(out, frame.stream_id);
  put_be64(out, frame.seq_no);
  out.push_back(frame.flags);
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
}

Bytes encode_frame(const Frame& frame) {
  Bytes out;
  encode_frame_into(frame, out);
  return out;
}

Frame decode_frame(ByteView bytes, std::size_t* consumed) {
  if (bytes.size() < kLengthPrefixBytes)
    fail(Errc::Truncated, "need 4 length bytes, have " + std::to_string(bytes.size()));
  const std::uint32_t length = get_be32(bytes.data());
  if (length < kHeaderBytes)
    fail(Errc::MalformedHeader, "declared length " + std::to_string(length) + " < 13");
  if (bytes.size() - kLengthPrefixBytes < length)
    fail(Errc::Truncated, "declared length " + std::to_string(length) + ", have " +
                              std::to_string(bytes.size() - kLengthPrefixBytes));
  const std::uint8_t* p = bytes.data() + kLengthPrefixBytes;
  Frame f;
  f.stream_id = get_be32(p);
  f.seq_no = get_be64(p + 4);
  f.flags = p[12];
  if ((f.flags & ~kKnownFlags) != 0)
    fail(Errc::UnknownFlagBits, "flags byte " + std::to_string(f.flags));
  f.payload.assign(p + kHeaderBytes, p + length);
  if (consumed) *consumed = kLengthPrefixBytes + length;
  return f;
}

void FrameReader::feed(ByteView data) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  } else if (offset_ > (1u << 20) && offset_ * 2 > buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), data.begin(), data.end());
}

std::optional<Frame> FrameReader::next() {
  const ByteView pending(buffer_.data() + offset_, buffer_.size() - offset_);
  if (pending.size() < kLengthPrefixBytes) return std::nullopt;
  const std::uint32_t length = get_be32(pending.data());
  if (length >= kHeaderBytes && pending.size() - kLengthPrefixBytes < length) return std::nullopt;
  std::size_t used = 0;
  Frame f = decode_frame(pending, &used);
  offset_ += used;
  return f;
}

}  // namespace sealflow::wire
