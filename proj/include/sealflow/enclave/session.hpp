#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sealflow/enclave/aead.hpp"
#include "sealflow/enclave/cost_model.hpp"
#include "sealflow/enclave/transform.hpp"

namespace sealflow::enclave {

inline constexpr std::size_t kDefaultMemoryBudget = 90ull * 1024 * 1024;

struct EnclaveConfig {
  std::size_t memory_budget = kDefaultMemoryBudget;
  CostModel crossing_cost;
  std::optional<Key> key;
  /// Hop index this enclave reads from. Inputs are opened with the subkey of
  /// `channel`; transform outputs are sealed with the subkey of `channel + 1`.
  std::uint32_t channel = 0;
  /// Sleep for the simulated crossing time on every call.
  bool realistic_delay = false;
};

struct SessionMetrics {
  std::uint64_t calls = 0;  // boundary crossings (process + copy calls)
  std::uint64_t process_calls = 0;
  std::uint64_t encrypt_calls = 0;
  std::uint64_t decrypt_calls = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  SimDuration simulated_crossing_time{0};
};

/// Reduce state kept inside the enclave between calls. 0 means stateless.
struct StateHandle {
  std::uint32_t id = 0;
  friend bool operator==(StateHandle, StateHandle) = default;
};

struct ProcessResult {
  SealedBlob output;
  StateHandle state;
};

/// Emulated trusted execution environment.
///
/// A session owns a memory region of `memory_budget` bytes reserved at
/// creation. Each sgxprocess call copies the sealed input into that region,
/// authenticates and decrypts it there, runs a registered transform with a
/// context offering only that memory and its reduce state, seals the result
/// and copies it out. Transient memory is released when the call returns,
/// on success or error. Reduce states persist in the session and count
/// against the budget. One call at a time per session.
class EnclaveSession {
 public:
  ~EnclaveSession();
  EnclaveSession(EnclaveSession&&) noexcept;
  EnclaveSession& operator=(EnclaveSession&&) noexcept;

  /// NoKey without a key; BudgetUnsatisfiable when the region cannot be reserved.
  static EnclaveSession create(EnclaveConfig config, TransformRegistry& registry = TransformRegistry::global());

  /// Seals under the session's channel. NonceReuse when (stream_id, seq_no)
  /// was already sealed under that key by this session.
  SealedBlob sgxencrypt(ByteView plaintext, std::uint32_t stream_id, std::uint64_t seq_no);
  Bytes sgxdecrypt(const SealedBlob& blob, std::uint32_t stream_id, std::uint64_t seq_no);

  ProcessResult sgxprocess(std::string_view transform, const SealedBlob& input, StateHandle state,
                           std::uint32_t stream_id, std::uint64_t seq_no);

  StateHandle open_state();
  /// Seals the state's encoding as (kResultStream, seq_no) under channel+1 and
  /// releases it.
  SealedBlob seal_state(StateHandle state, std::uint64_t seq_no);

  /// Copy-only ecall: moves `chunk` into the region (and back for InOut).
  /// Returns the simulated crossing time charged.
  SimDuration ecall_copy(ByteView chunk, Direction direction);

  std::size_t used_memory() const noexcept;
  std::size_t state_memory() const noexcept;
  std::size_t memory_budget() const noexcept;
  const SessionMetrics& metrics() const noexcept;
  std::vector<std::string> transform_names() const;
  const EnclaveConfig& config() const noexcept;

 private:
  struct Impl;
  explicit EnclaveSession(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

inline EnclaveSession create_enclave(EnclaveConfig config,
                                     TransformRegistry& registry = TransformRegistry::global()) {
  return EnclaveSession::create(std::move(config), registry);
}

}  // namespace sealflow::enclave
