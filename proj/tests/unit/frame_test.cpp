#include "sealflow/wire/frame.hpp"

#include "test_util.hpp"

using namespace sealflow;
using namespace sealflow::wire;

TEST_CASE("empty frame encodes to the 17-byte header") {
  const Bytes bytes = encode_frame(Frame{0, 0, 0, {}});
  const Bytes expected{0, 0, 0, 13, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(bytes == expected);
  std::size_t used = 0;
  CHECK(decode_frame(bytes, &used) == Frame{0, 0, 0, {}});
  CHECK(used == 17);
}

TEST_CASE("END_OF_STREAM sets flag bit 0x01") {
  const Bytes bytes = encode_frame(Frame{1, 2, kEndOfStream, {}});
  REQUIRE(bytes.size() == 17);
  CHECK(bytes[16] == 0x01);
  CHECK(bytes[7] == 1);   // stream id low byte
  CHECK(bytes[15] == 2);  // seq_no low byte
}

TEST_CASE("payload size limit") {
  CHECK(encoded_size(0) == 17);
  CHECK(encoded_size(kMaxPayload) == (std::uint64_t{1} << 32) + 3);
  CHECK_ERRC(encoded_size(kMaxPayload + 1), Errc::PayloadTooLarge);
}

TEST_CASE("decode errors") {
  const Bytes three{0, 0, 0};
  CHECK_ERRC(decode_frame(three), Errc::Truncated);

  Bytes short_len{0, 0, 0, 5, 1, 2, 3, 4, 5};
  CHECK_ERRC(decode_frame(short_len), Errc::MalformedHeader);

  Bytes f = encode_frame(Frame{3, 4, 0, {9, 9}});
  f.pop_back();
  CHECK_ERRC(decode_frame(f), Errc::Truncated);

  Bytes bad_flags = encode_frame(Frame{3, 4, 0, {}});
  bad_flags[16] = 0x04;
  CHECK_ERRC(decode_frame(bad_flags), Errc::UnknownFlagBits);
}

TEST_CASE("round trip of randomized frames") {
  std::mt19937_64 rng(7);
  SUBCASE("1 KiB encrypted frame") {
    const Frame f{7, 42, kEncrypted, testutil::random_bytes(rng, 1024)};
    CHECK(decode_frame(encode_frame(f)) == f);
  }
  SUBCASE("10k random frames through a stream reader fed in random cuts") {
    std::vector<Frame> frames;
    Bytes stream;
    for (int i = 0; i < 10000; ++i) {
      Frame f{static_cast<std::uint32_t>(rng()), rng(), static_cast<std::uint8_t>(rng() % 4),
              testutil::random_bytes(rng, rng() % 300)};
      if (f.end_of_stream()) f.payload.clear();
      encode_frame_into(f, stream);
      frames.push_back(std::move(f));
    }
    FrameReader reader;
    std::size_t pos = 0, got = 0;
    while (pos < stream.size()) {
      const std::size_t cut = std::min<std::size_t>(1 + rng() % 700, stream.size() - pos);
      reader.feed(ByteView(stream.data() + pos, cut));
      pos += cut;
      while (auto f = reader.next()) {
        REQUIRE(got < frames.size());
        CHECK(*f == frames[got]);
        ++got;
      }
    }
    CHECK(got == frames.size());
    CHECK(reader.buffered() == 0);
  }
}
