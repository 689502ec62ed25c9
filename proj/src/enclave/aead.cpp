#include "sealflow/enclave/aead.hpp"

#include <sodium.h>

#include <cstdlib>
#include <cstring>
#include <mutex>

#include "sealflow/error.hpp"

namespace sealflow::enclave {
namespace {

void ensure_sodium() {
  static const int rc = ::sodium_init();
  if (rc < 0) fail(Errc::NoKey, "libsodium initialisation failed");
}

std::array<std::uint8_t, 12> associated_data(std::uint32_t stream_id, std::uint64_t seq_no) {
  return frame_nonce(stream_id, seq_no);
}

constexpr char kKdfContext[crypto_kdf_CONTEXTBYTES + 1] = "sealflow";

}  // namespace

Key Key::from_hex(std::string_view hex) {
  ensure_sodium();
  Key k;
  std::size_t len = 0;
  const char* end = nullptr;
  if (hex.size() != 2 * kKeyBytes ||
      ::sodium_hex2bin(k.bytes.data(), k.bytes.size(), hex.data(), hex.size(), nullptr, &len, &end) != 0 ||
      len != kKeyBytes)
    fail(Errc::NoKey, "key must be 64 hex characters");
  return k;
}

std::optional<Key> Key::from_env(const char* var) {
  const char* value = std::getenv(var);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return from_hex(value);
}

Key Key::random() {
  ensure_sodium();
  Key k;
  ::randombytes_buf(k.bytes.data(), k.bytes.size());
  return k;
}

std::string Key::to_hex() const {
  std::string out(2 * kKeyBytes + 1, '\0');
  ::sodium_bin2hex(out.data(), out.size(), bytes.data(), bytes.size());
  out.pop_back();
  return out;
}

Bytes SealedBlob::serialize() const {
  Bytes out;
  out.reserve(wire_size());
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

SealedBlob SealedBlob::parse(ByteView bytes) {
  if (bytes.size() < kNonceBytes + kTagBytes) fail(Errc::AuthFailure, "sealed blob shorter than nonce+tag");
  SealedBlob b;
  std::memcpy(b.nonce.data(), bytes.data(), kNonceBytes);
  b.ciphertext.assign(bytes.begin() + kNonceBytes, bytes.end() - kTagBytes);
  std::memcpy(b.tag.data(), bytes.data() + bytes.size() - kTagBytes, kTagBytes);
  return b;
}

Nonce frame_nonce(std::uint32_t stream_id, std::uint64_t seq_no) {
  Nonce n{};
  Bytes tmp;
  put_be32(tmp, stream_id);
  put_be64(tmp, seq_no);
  std::memcpy(n.data(), tmp.data(), n.size());
  return n;
}

Key channel_key(const Key& master, std::uint32_t channel) {
  ensure_sodium();
  Key sub;
  ::crypto_kdf_derive_from_key(sub.bytes.data(), sub.bytes.size(), channel, kKdfContext, master.bytes.data());
  return sub;
}

SealedBlob seal(const Key& key, ByteView plaintext, std::uint32_t stream_id, std::uint64_t seq_no) {
  ensure_sodium();
  SealedBlob blob;
  blob.nonce = frame_nonce(stream_id, seq_no);
  blob.ciphertext.resize(plaintext.size());
  const auto ad = associated_data(stream_id, seq_no);
  unsigned long long tag_len = 0;
  ::crypto_aead_chacha20poly1305_ietf_encrypt_detached(
      blob.ciphertext.data(), blob.tag.data(), &tag_len, plaintext.data(), plaintext.size(), ad.data(),
      ad.size(), nullptr, blob.nonce.data(), key.bytes.data());
  return blob;
}

void open_in_place(const Key& key, const Nonce& nonce, std::span<std::uint8_t> ciphertext,
                   const std::array<std::uint8_t, kTagBytes>& tag, std::uint32_t stream_id,
                   std::uint64_t seq_no) {
  ensure_sodium();
  const auto ad = associated_data(stream_id, seq_no);
  if (::crypto_aead_chacha20poly1305_ietf_decrypt_detached(ciphertext.data(), nullptr, ciphertext.data(),
                                                           ciphertext.size(), tag.data(), ad.data(), ad.size(),
                                                           nonce.data(), key.bytes.data()) != 0)
    fail(Errc::AuthFailure, "authentication tag mismatch for stream " + std::to_string(stream_id) +
                                " seq " + std::to_string(seq_no));
}

Bytes open(const Key& key, const SealedBlob& blob, std::uint32_t stream_id, std::uint64_t seq_no) {
  Bytes plain = blob.ciphertext;
  open_in_place(key, blob.nonce, plain, blob.tag, stream_id, seq_no);
  return plain;
}

ChannelCipher::ChannelCipher(const Key& master) : master_(master) {}

const Key& ChannelCipher::key_for(std::uint32_t channel) {
  if (subkeys_.size() <= channel) subkeys_.resize(channel + 1);
  if (!subkeys_[channel]) subkeys_[channel] = channel_key(master_, channel);
  return *subkeys_[channel];
}

SealedBlob ChannelCipher::seal(std::uint32_t channel, ByteView plaintext, std::uint32_t stream_id,
                               std::uint64_t seq_no) {
  ++encrypts_;
  return enclave::seal(key_for(channel), plaintext, stream_id, seq_no);
}

Bytes ChannelCipher::open(std::uint32_t channel, const SealedBlob& blob, std::uint32_t stream_id,
                          std::uint64_t seq_no) {
  ++decrypts_;
  return enclave::open(key_for(channel), blob, stream_id, seq_no);
}

}  // namespace sealflow::enclave
