#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "sealflow/enclave/session.hpp"
#include "sealflow/error.hpp"
#include "sealflow/pipeline/spec.hpp"
#include "sealflow/stats.hpp"
#include "sealflow/wire/endpoint.hpp"

namespace sealflow::pipeline::detail {

enum class Phase : int { Starting, Ready, Waiting, Processing, Sending, Done, Failed };

const char* phase_name(Phase p) noexcept;

/// Live progress of one component. Lives in memory shared with forked
/// children, so it holds only lock-free atomics and a fixed text buffer.
struct ComponentStatus {
  std::atomic<int> phase{0};
  std::atomic<std::int64_t> phase_since{0};  // steady clock, ns
  std::atomic<std::uint64_t> frames_in{0};
  std::atomic<std::uint64_t> frames_out{0};
  std::atomic<std::uint64_t> eos_in{0};  // END_OF_STREAM frames received, duplicates included
  std::atomic<std::uint64_t> bytes_in{0};
  std::atomic<std::uint64_t> bytes_out{0};
  std::atomic<std::uint64_t> encrypt_calls{0};
  std::atomic<std::uint64_t> decrypt_calls{0};
  std::atomic<std::uint64_t> process_calls{0};
  std::atomic<std::uint64_t> simulated_ns{0};
  std::atomic<std::uint16_t> in_port{0};
  std::atomic<std::uint16_t> out_port{0};
  std::atomic<bool> draining{false};
  std::atomic<bool> stop{false};
  std::atomic<bool> retire{false};
  std::atomic<int> errc{0};
  char error[240]{};

  void set_phase(Phase p);
  Phase get_phase() const { return static_cast<Phase>(phase.load()); }
  bool finished() const {
    const Phase p = get_phase();
    return p == Phase::Done || p == Phase::Failed;
  }
  void record_failure(Errc code, const std::string& message);
};

static_assert(std::atomic<std::uint64_t>::is_always_lock_free);
static_assert(std::atomic<std::int64_t>::is_always_lock_free);

/// Everything one component needs; built by the launcher.
struct ComponentPlan {
  std::string name;
  std::size_t stage = 0;
  Role role = Role::Worker;
  std::uint32_t index = 0;  // unique within the stage
  Mode mode = Mode::Clear;
  std::optional<enclave::Key> key;
  std::uint32_t streams = 1;
  std::string stats_path;
  SteadyClock::time_point epoch{};
  std::chrono::milliseconds connect_timeout{10'000};

  // source
  std::string input;
  bool header = true;
  std::size_t chunk_records = 2048;

  // router
  wire::Endpoint bind_in;
  wire::Endpoint bind_out;
  std::size_t expected_upstreams = 1;

  // worker and sink
  wire::Endpoint upstream;
  std::optional<wire::Endpoint> downstream;
  std::string transform;
  std::uint32_t channel = 0;
  std::optional<wire::Endpoint> result_sink;  // sinks push their state here
  std::size_t memory_budget = enclave::kDefaultMemoryBudget;
  enclave::CostModel cost_model;
  bool realistic_delay = false;
  std::uint64_t wedge_after = 0;  // 0: never
};

/// Runs the component to completion, recording the outcome in `status`.
/// Never throws.
void run_component(const ComponentPlan& plan, ComponentStatus& status, enclave::TransformRegistry& registry);

}  // namespace sealflow::pipeline::detail
