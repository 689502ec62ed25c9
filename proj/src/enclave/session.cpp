#include "sealflow/enclave/session.hpp"

#include <sys/mman.h>

#include <cstring>
#include <set>
#include <thread>
#include <tuple>

#include "sealflow/error.hpp"
#include "sealflow/wire/frame.hpp"

namespace sealflow::enclave {
namespace {

constexpr std::size_t kAlign = 16;

std::size_t align_up(std::size_t n) { return (n + kAlign - 1) & ~(kAlign - 1); }

}  // namespace

struct EnclaveSession::Impl final : Arena {
  EnclaveConfig config;
  std::shared_ptr<const TransformTable> table;
  Key in_key;
  Key out_key;
  std::uint8_t* region = nullptr;
  std::size_t used = 0;
  std::size_t state_bytes = 0;
  std::map<std::uint32_t, std::pair<dataflow::ReduceState, std::size_t>> states;
  std::uint32_t next_state = 1;
  SessionMetrics metrics;
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint64_t>> sealed;

  ~Impl() override {
    if (region != nullptr) ::munmap(region, config.memory_budget);
  }

  void reserve(std::size_t bytes, const char* what) {
    if (bytes > config.memory_budget || used + state_bytes + bytes > config.memory_budget)
      fail(Errc::MemoryBudgetExceeded, std::string(what) + ": " + std::to_string(bytes) + " bytes requested, " +
                                           std::to_string(config.memory_budget - used - state_bytes) +
                                           " of " + std::to_string(config.memory_budget) + " free");
  }

  std::span<std::uint8_t> allocate(std::size_t bytes) override {
    const std::size_t n = align_up(bytes);
    reserve(n, "arena allocation");
    std::uint8_t* p = region + used;
    used += n;
    return {p, bytes};
  }

  void claim_nonce(std::uint32_t channel, std::uint32_t stream_id, std::uint64_t seq_no) {
    if (!sealed.emplace(channel, stream_id, seq_no).second)
      fail(Errc::NonceReuse, "stream " + std::to_string(stream_id) + " seq " + std::to_string(seq_no) +
                                 " already sealed on channel " + std::to_string(channel));
  }

  void charge(SimDuration cost) {
    metrics.simulated_crossing_time += cost;
    if (config.realistic_delay)
      std::this_thread::sleep_for(std::chrono::duration_cast<std::chrono::nanoseconds>(cost));
  }
};

namespace {

/// Restores transient memory accounting when a call leaves the boundary.
class TransientScope {
 public:
  explicit TransientScope(std::size_t& used) : used_(used), saved_(used) {}
  ~TransientScope() { used_ = saved_; }
  TransientScope(const TransientScope&) = delete;
  TransientScope& operator=(const TransientScope&) = delete;

 private:
  std::size_t& used_;
  std::size_t saved_;
};

}  // namespace

EnclaveSession::EnclaveSession(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
EnclaveSession::~EnclaveSession() = default;
EnclaveSession::EnclaveSession(EnclaveSession&&) noexcept = default;
EnclaveSession& EnclaveSession::operator=(EnclaveSession&&) noexcept = default;

EnclaveSession EnclaveSession::create(EnclaveConfig config, TransformRegistry& registry) {
  if (!config.key) fail(Errc::NoKey, "enclave key not provisioned");
  if (config.memory_budget == 0) fail(Errc::BudgetUnsatisfiable, "memory budget is zero");
  void* region = ::mmap(nullptr, config.memory_budget, PROT_READ | PROT_WRITE,
                        MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
  if (region == MAP_FAILED)
    fail(Errc::BudgetUnsatisfiable, "cannot reserve " + std::to_string(config.memory_budget) + " bytes");
  auto impl = std::make_unique<Impl>();
  impl->region = static_cast<std::uint8_t*>(region);
  impl->in_key = channel_key(*config.key, config.channel);
  impl->out_key = channel_key(*config.key, config.channel + 1);
  impl->config = std::move(config);
  impl->table = registry.freeze();
  return EnclaveSession(std::move(impl));
}

SealedBlob EnclaveSession::sgxencrypt(ByteView plaintext, std::uint32_t stream_id, std::uint64_t seq_no) {
  impl_->claim_nonce(impl_->config.channel, stream_id, seq_no);
  ++impl_->metrics.encrypt_calls;
  return seal(impl_->in_key, plaintext, stream_id, seq_no);
}

Bytes EnclaveSession::sgxdecrypt(const SealedBlob& blob, std::uint32_t stream_id, std::uint64_t seq_no) {
  ++impl_->metrics.decrypt_calls;
  return open(impl_->in_key, blob, stream_id, seq_no);
}

ProcessResult EnclaveSession::sgxprocess(std::string_view transform, const SealedBlob& input, StateHandle state,
                                         std::uint32_t stream_id, std::uint64_t seq_no) {
  Impl& s = *impl_;
  const auto it = s.table->find(transform);
  if (it == s.table->end()) fail(Errc::UnknownTransform, "no transform named '" + std::string(transform) + "'");
  const TransformDef& def = it->second;

  std::pair<dataflow::ReduceState, std::size_t>* resident = nullptr;
  if (state.id != 0) {
    auto st = s.states.find(state.id);
    if (st == s.states.end()) fail(Errc::TransformPanic, "unknown state handle " + std::to_string(state.id));
    resident = &st->second;
  }

  TransientScope scope(s.used);
  SimDuration cost = crossing_time(s.config.crossing_cost, input.wire_size(), Direction::In);

  // Copy-in: the sealed chunk plus the transform's declared working set.
  s.reserve(align_up(input.ciphertext.size()) + def.memory_hint, "copy-in");
  std::span<std::uint8_t> chunk = s.allocate(input.ciphertext.size());
  if (!chunk.empty()) std::memcpy(chunk.data(), input.ciphertext.data(), chunk.size());
  s.used += def.memory_hint;

  open_in_place(s.in_key, input.nonce, chunk, input.tag, stream_id, seq_no);

  dataflow::ReduceState working;
  if (resident) working = resident->first;
  Bytes output;
  try {
    TransformContext ctx(resident ? &working : nullptr, s);
    output = def.fn(ctx, chunk);
  } catch (const Error& e) {
    if (!chunk.empty()) std::memset(chunk.data(), 0, chunk.size());
    if (e.code() == Errc::MemoryBudgetExceeded) throw;
    fail(Errc::TransformPanic, "transform '" + def.name + "' failed (" + std::string(errc_name(e.code())) + ")");
  } catch (const std::exception&) {
    if (!chunk.empty()) std::memset(chunk.data(), 0, chunk.size());
    fail(Errc::TransformPanic, "transform '" + def.name + "' failed");
  }
  if (!chunk.empty()) std::memset(chunk.data(), 0, chunk.size());

  std::size_t new_state_bytes = 0;
  if (resident) {
    new_state_bytes = working.footprint();
    if (new_state_bytes > resident->second)
      s.reserve(new_state_bytes - resident->second, "reduce state growth");
  }

  s.claim_nonce(s.config.channel + 1, stream_id, seq_no);
  SealedBlob sealed = seal(s.out_key, output, stream_id, seq_no);
  // Copy-out is a crossing of its own, priced on the output size.
  cost += crossing_time(s.config.crossing_cost, sealed.wire_size(), Direction::In);

  if (resident) {
    s.state_bytes = s.state_bytes - resident->second + new_state_bytes;
    resident->first = std::move(working);
    resident->second = new_state_bytes;
  }
  ++s.metrics.calls;
  ++s.metrics.process_calls;
  s.metrics.bytes_in += input.wire_size();
  s.metrics.bytes_out += sealed.wire_size();
  s.charge(cost);
  return ProcessResult{std::move(sealed), state};
}

StateHandle EnclaveSession::open_state() {
  Impl& s = *impl_;
  dataflow::ReduceState fresh;
  const std::size_t bytes = fresh.footprint();
  s.reserve(bytes, "reduce state");
  const std::uint32_t id = s.next_state++;
  s.states.emplace(id, std::make_pair(std::move(fresh), bytes));
  s.state_bytes += bytes;
  return StateHandle{id};
}

SealedBlob EnclaveSession::seal_state(StateHandle state, std::uint64_t seq_no) {
  Impl& s = *impl_;
  auto it = s.states.find(state.id);
  if (it == s.states.end()) fail(Errc::TransformPanic, "unknown state handle " + std::to_string(state.id));
  s.claim_nonce(s.config.channel + 1, wire::kResultStream, seq_no);
  const Bytes encoded = it->second.first.encode();
  SealedBlob blob = seal(s.out_key, encoded, wire::kResultStream, seq_no);
  s.state_bytes -= it->second.second;
  s.states.erase(it);
  SimDuration cost = crossing_time(s.config.crossing_cost, 0, Direction::In) +
                     crossing_time(s.config.crossing_cost, blob.wire_size(), Direction::In);
  ++s.metrics.calls;
  s.metrics.bytes_out += blob.wire_size();
  s.charge(cost);
  return blob;
}

SimDuration EnclaveSession::ecall_copy(ByteView chunk, Direction direction) {
  Impl& s = *impl_;
  TransientScope scope(s.used);
  std::span<std::uint8_t> inside = s.allocate(chunk.size());
  if (!chunk.empty()) std::memcpy(inside.data(), chunk.data(), chunk.size());
  if (direction == Direction::InOut) {
    thread_local Bytes outside;
    outside.resize(chunk.size());
    if (!chunk.empty()) std::memcpy(outside.data(), inside.data(), chunk.size());
    s.metrics.bytes_out += chunk.size();
  }
  const SimDuration cost = crossing_time(s.config.crossing_cost, chunk.size(), direction);
  ++s.metrics.calls;
  s.metrics.bytes_in += chunk.size();
  s.charge(cost);
  return cost;
}

std::size_t EnclaveSession::used_memory() const noexcept { return impl_->used; }
std::size_t EnclaveSession::state_memory() const noexcept { return impl_->state_bytes; }
std::size_t EnclaveSession::memory_budget() const noexcept { return impl_->config.memory_budget; }
const SessionMetrics& EnclaveSession::metrics() const noexcept { return impl_->metrics; }
const EnclaveConfig& EnclaveSession::config() const noexcept { return impl_->config; }

std::vector<std::string> EnclaveSession::transform_names() const {
  std::vector<std::string> out;
  for (const auto& [name, def] : *impl_->table) out.push_back(name);
  return out;
}

}  // namespace sealflow::enclave
