#pragma once

#include <cstdint>
#include <optional>

#include "sealflow/bytes.hpp"

namespace sealflow::wire {

/// Flag bits carried in the single flags byte of a frame header.
enum FrameFlag : std::uint8_t {
  kEndOfStream = 0x01,
  kEncrypted = 0x02,
};

inline constexpr std::uint8_t kKnownFlags = kEndOfStream | kEncrypted;

/// Fixed bytes following the length prefix: stream id, sequence number, flags.
inline constexpr std::size_t kHeaderBytes = 13;
inline constexpr std::size_t kLengthPrefixBytes = 4;
inline constexpr std::uint64_t kMaxPayload = (std::uint64_t{1} << 32) - kHeaderBytes - 1;

/// Reserved stream id for connection-level control. An END_OF_STREAM frame on
/// this stream means "no further frames on this connection" (retirement).
inline constexpr std::uint32_t kControlStream = 0xFFFFFFFFu;
/// Reserved stream id used to seal a reducer's final state.
inline constexpr std::uint32_t kResultStream = 0xFFFFFFFEu;

struct Frame {
  std::uint32_t stream_id = 0;
  std::uint64_t seq_no = 0;
  std::uint8_t flags = 0;
  Bytes payload;

  bool end_of_stream() const noexcept { return (flags & kEndOfStream) != 0; }
  bool encrypted() const noexcept { return (flags & kEncrypted) != 0; }
  bool is_control() const noexcept { return stream_id == kControlStream && end_of_stream(); }

  static Frame eos(std::uint32_t stream_id, std::uint64_t seq_no) {
    return Frame{stream_id, seq_no, kEndOfStream, {}};
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Appends the encoding of `frame` to `out`. Layout (big-endian):
/// u32 total-length (13 + payload), u32 stream_id, u64 seq_no, u8 flags, payload.
/// Size of the encoding for a payload of `payload_bytes`; PayloadTooLarge when
/// the total length would not fit the 32-bit prefix.
std::uint64_t encoded_size(std::uint64_t payload_bytes);

void encode_frame_into(const Frame& frame, Bytes& out);
Bytes encode_frame(const Frame& frame);

/// Decodes one frame from the front of `bytes`; `consumed` receives the number
/// of bytes used (total-length + 4).
Frame decode_frame(ByteView bytes, std::size_t* consumed = nullptr);

/// Incremental decoder for a byte stream carrying back-to-back frames.
class FrameReader {
 public:
  void feed(ByteView data);
  /// Returns the next complete frame, or nullopt when more bytes are needed.
  std::optional<Frame> next();
  std::size_t buffered() const noexcept { return buffer_.size() - offset_; }

 private:
  Bytes buffer_;
  std::size_t offset_ = 0;
};

}  // namespace sealflow::wire
