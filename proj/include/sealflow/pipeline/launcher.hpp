#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sealflow/dataflow/reduce_state.hpp"
#include "sealflow/enclave/session.hpp"
#include "sealflow/pipeline/spec.hpp"

namespace sealflow::pipeline {

/// Each component runs on its own thread, or in its own forked process.
enum class Isolation { Thread, Process };

/// Test hook: the first worker of `wedge_stage` stops making progress inside
/// its transform after `after_frames` data frames.
struct FaultInjection {
  std::string wedge_stage;
  std::uint64_t after_frames = 1;
};

struct LaunchOptions {
  Isolation isolation = Isolation::Thread;
  /// Routers bind kernel-chosen ports instead of the configured ones.
  bool ephemeral_ports = false;
  /// Replaces every source's `input` when non-empty.
  std::string input;
  /// One throughput CSV per component when non-empty.
  std::string stats_dir;
  bool realistic_delay = false;
  /// Used instead of the spec's key env var when set.
  std::optional<enclave::Key> key;
  enclave::CostModel cost_model;
  std::size_t memory_budget = enclave::kDefaultMemoryBudget;
  std::chrono::milliseconds connect_timeout{10'000};
  FaultInjection fault;
};

struct StageReport {
  std::string name;
  Role role = Role::Worker;
  std::size_t components = 0;  // every component that ran, retired ones included
  std::uint64_t frames_in = 0;
  std::uint64_t frames_out = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  /// Data frames received by each component, in start order.
  std::vector<std::uint64_t> per_component_in;
  /// END_OF_STREAM frames each worker or sink received.
  std::vector<std::uint64_t> per_component_eos;
};

struct PipelineReport {
  Mode mode = Mode::Clear;
  std::vector<StageReport> stages;
  /// From the moment sources start until every sink delivered its result.
  std::chrono::nanoseconds completion_time{0};
  /// Partial reducer states merged at the sink.
  dataflow::ReduceState result;
  std::uint64_t encrypt_calls = 0;
  std::uint64_t decrypt_calls = 0;
  std::uint64_t process_calls = 0;
  enclave::SimDuration simulated_crossing_time{0};

  const StageReport& stage(std::string_view name) const;
};

/// A launched pipeline. Destroying it stops whatever is still running.
class Deployment {
 public:
  ~Deployment();
  Deployment(Deployment&&) noexcept;
  Deployment& operator=(Deployment&&) noexcept;

  const PipelineSpec& spec() const noexcept;
  /// Components started so far, retired ones included.
  std::size_t component_count() const;
  /// Components that are connected and not finished.
  std::size_t live_components() const;
  /// Workers of a stage that are neither retiring nor finished.
  std::size_t active_workers(std::string_view stage) const;

  /// Spawns workers or retires the most recent ones. UnknownStage,
  /// CannotScaleSource, InvalidScale (count < 1, non-worker stage, or the
  /// stage's input is already closing).
  void scale_stage(std::string_view stage, std::size_t count);

  /// Waits for every sink result. Timeout names the stalled stage and lists
  /// per-component progress; a failed component rethrows its error.
  PipelineReport await_completion(std::chrono::milliseconds timeout);

  /// One line per component: name, phase, frames in/out.
  std::string progress() const;

 private:
  friend Deployment launch(PipelineSpec, LaunchOptions, enclave::TransformRegistry&);
  struct Impl;
  explicit Deployment(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Starts routers, then workers, then sinks, then sources, and returns once
/// all of them are connected. LaunchFailure names the failing component; a
/// missing key is reported before anything starts.
Deployment launch(PipelineSpec spec, LaunchOptions options = {},
                  enclave::TransformRegistry& registry = default_registry());

inline void scale_stage(Deployment& d, std::string_view stage, std::size_t count) { d.scale_stage(stage, count); }
inline PipelineReport await_completion(Deployment& d, std::chrono::milliseconds timeout) {
  return d.await_completion(timeout);
}

}  // namespace sealflow::pipeline
