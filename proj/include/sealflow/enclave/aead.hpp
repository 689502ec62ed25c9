#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sealflow/bytes.hpp"

namespace sealflow::enclave {

inline constexpr std::size_t kKeyBytes = 32;
inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;

/// Environment variable holding the hex-encoded 32-byte pipeline key.
inline constexpr const char* kKeyEnvVar = "SEALFLOW_KEY";

/// 256-bit symmetric secret, provisioned before any enclave is created.
struct Key {
  std::array<std::uint8_t, kKeyBytes> bytes{};

  static Key from_hex(std::string_view hex);
  static std::optional<Key> from_env(const char* var = kKeyEnvVar);
  static Key random();
  std::string to_hex() const;

  friend bool operator==(const Key&, const Key&) = default;
};

using Nonce = std::array<std::uint8_t, kNonceBytes>;

/// Ciphertext bound to a frame identity (stream_id, seq_no).
struct SealedBlob {
  Nonce nonce{};
  Bytes ciphertext;
  std::array<std::uint8_t, kTagBytes> tag{};

  std::size_t wire_size() const noexcept { return kNonceBytes + ciphertext.size() + kTagBytes; }
  /// nonce || ciphertext || tag
  Bytes serialize() const;
  static SealedBlob parse(ByteView bytes);

  friend bool operator==(const SealedBlob&, const SealedBlob&) = default;
};

/// Nonce derived from the frame identity: big-endian stream_id then seq_no.
Nonce frame_nonce(std::uint32_t stream_id, std::uint64_t seq_no);

/// Subkey for one pipeline hop. Every hop re-encrypts frames under the same
/// (stream_id, seq_no) identity, so each hop needs its own key to keep nonces
/// unique per key.
Key channel_key(const Key& master, std::uint32_t channel);

/// ChaCha20-Poly1305 (IETF) with (stream_id, seq_no) as associated data.
SealedBlob seal(const Key& key, ByteView plaintext, std::uint32_t stream_id, std::uint64_t seq_no);
/// Throws AuthFailure on any mismatch of key, ciphertext, tag or identity.
Bytes open(const Key& key, const SealedBlob& blob, std::uint32_t stream_id, std::uint64_t seq_no);
/// In-place variant: decrypts `ciphertext` over itself.
void open_in_place(const Key& key, const Nonce& nonce, std::span<std::uint8_t> ciphertext,
                   const std::array<std::uint8_t, kTagBytes>& tag, std::uint32_t stream_id,
                   std::uint64_t seq_no);

/// Host-side sealing used outside any enclave: data sources, the ENCRYPTED
/// pipeline mode, and the result collector.
class ChannelCipher {
 public:
  explicit ChannelCipher(const Key& master);

  SealedBlob seal(std::uint32_t channel, ByteView plaintext, std::uint32_t stream_id, std::uint64_t seq_no);
  Bytes open(std::uint32_t channel, const SealedBlob& blob, std::uint32_t stream_id, std::uint64_t seq_no);

  std::uint64_t encrypt_calls() const noexcept { return encrypts_; }
  std::uint64_t decrypt_calls() const noexcept { return decrypts_; }

 private:
  const Key& key_for(std::uint32_t channel);

  Key master_;
  std::vector<std::optional<Key>> subkeys_;
  std::uint64_t encrypts_ = 0;
  std::uint64_t decrypts_ = 0;
};

}  // namespace sealflow::enclave
