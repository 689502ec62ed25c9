#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "sealflow/bytes.hpp"
#include "sealflow/dataflow/reduce_state.hpp"

namespace sealflow::enclave {

enum class TransformKind { Map, Filter, Reduce, Parse };

/// Memory source for a running transform.
class Arena {
 public:
  virtual ~Arena() = default;
  virtual std::span<std::uint8_t> allocate(std::size_t bytes) = 0;
};

/// Plain heap arena used when a transform runs outside any enclave.
class HeapArena final : public Arena {
 public:
  std::span<std::uint8_t> allocate(std::size_t bytes) override;

 private:
  std::vector<std::unique_ptr<std::uint8_t[]>> blocks_;
};

/// Everything a transform can reach: its reduce state and scratch memory.
/// There is deliberately nothing else here (no files, sockets, clock or
/// environment), matching what code inside the boundary may touch.
class TransformContext {
 public:
  TransformContext(dataflow::ReduceState* state, Arena& arena) : state_(state), arena_(arena) {}
  TransformContext(const TransformContext&) = delete;
  TransformContext& operator=(const TransformContext&) = delete;

  /// Throws TransformPanic for stateless calls.
  dataflow::ReduceState& state();
  bool has_state() const noexcept { return state_ != nullptr; }
  std::span<std::uint8_t> allocate(std::size_t bytes) { return arena_.allocate(bytes); }

 private:
  dataflow::ReduceState* state_;
  Arena& arena_;
};

/// Byte-level transform body: decoded plaintext chunk in, plaintext chunk out.
using TransformFn = std::function<Bytes(TransformContext&, ByteView)>;

struct TransformDef {
  std::string name;
  TransformKind kind = TransformKind::Map;
  TransformFn fn;
  /// Working memory reserved for one call, on top of the input copy.
  std::size_t memory_hint = 0;
};

using TransformTable = std::map<std::string, TransformDef, std::less<>>;

/// Static set of transforms packed with the enclave image. Registration closes
/// for good when the first session is created from the registry.
class TransformRegistry {
 public:
  /// Throws RegistrationAfterCreate once frozen, DuplicateName on a clash.
  void add(TransformDef def);
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;
  bool frozen() const;

  /// Freezes the registry and returns the immutable table sessions share.
  std::shared_ptr<const TransformTable> freeze();

  /// Process-wide registry used by default.
  static TransformRegistry& global();

 private:
  mutable std::mutex mutex_;
  TransformTable table_;
  std::shared_ptr<const TransformTable> frozen_;
};

/// Registers into the process-wide registry.
void register_transform(TransformDef def);

}  // namespace sealflow::enclave
