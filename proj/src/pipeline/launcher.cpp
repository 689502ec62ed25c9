#include "sealflow/pipeline/launcher.hpp"

#include <signal.h>
#include <sys/mman.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include "component.hpp"
#include "sealflow/error.hpp"
#include "sealflow/wire/frame.hpp"
#include "sealflow/wire/socket.hpp"

namespace sealflow::pipeline {

using namespace std::chrono_literals;
using detail::ComponentPlan;
using detail::ComponentStatus;
using detail::Phase;

namespace {

constexpr std::size_t kMaxComponents = 512;

/// Status slots in anonymous shared memory, visible to forked children.
class StatusArena {
 public:
  StatusArena() {
    void* p = ::mmap(nullptr, bytes(), PROT_READ | PROT_WRITE, MAP_SHARED | MAP_ANONYMOUS, -1, 0);
    if (p == MAP_FAILED) fail(Errc::LaunchFailure, "cannot map status memory");
    slots_ = static_cast<ComponentStatus*>(p);
    for (std::size_t i = 0; i < kMaxComponents; ++i) new (&slots_[i]) ComponentStatus();
  }
  ~StatusArena() {
    if (slots_) ::munmap(slots_, bytes());
  }
  StatusArena(const StatusArena&) = delete;
  StatusArena& operator=(const StatusArena&) = delete;

  ComponentStatus& operator[](std::size_t i) { return slots_[i]; }
  const ComponentStatus& operator[](std::size_t i) const { return slots_[i]; }

 private:
  static std::size_t bytes() { return sizeof(ComponentStatus) * kMaxComponents; }
  ComponentStatus* slots_ = nullptr;
};

wire::Endpoint loopback(std::uint16_t port) { return wire::Endpoint{"127.0.0.1", port}; }

std::string errc_text(const ComponentStatus& s) {
  return s.error;
}

}  // namespace

const StageReport& PipelineReport::stage(std::string_view name) const {
  for (const auto& s : stages)
    if (s.name == name) return s;
  fail(Errc::UnknownStage, "no stage named '" + std::string(name) + "'");
}

struct Deployment::Impl {
  struct Component {
    ComponentPlan plan;
    std::size_t slot = 0;
    std::thread thread;
    pid_t pid = -1;
    bool reaped = false;
  };

  PipelineSpec spec;
  LaunchOptions options;
  enclave::TransformRegistry* registry = nullptr;
  std::optional<enclave::Key> key;
  StatusArena status;
  std::vector<std::unique_ptr<Component>> components;
  std::vector<std::vector<std::size_t>> by_stage;  // component indices per stage
  std::vector<std::uint32_t> next_index;           // per stage
  std::vector<std::size_t> router_slot;            // per stage, routers only
  wire::PullSocket collector;
  wire::Endpoint collector_ep;
  std::size_t expected_results = 0;
  SteadyClock::time_point epoch = SteadyClock::now();
  SteadyClock::time_point started{};
  bool completed = false;

  std::uint32_t streams() const { return static_cast<std::uint32_t>(spec.stages.front().workers); }

  ComponentPlan base_plan(std::size_t stage_idx) {
    const StageSpec& st = spec.stages[stage_idx];
    ComponentPlan p;
    p.stage = stage_idx;
    p.role = st.role;
    p.index = next_index[stage_idx]++;
    p.name = st.role == Role::Router ? st.name : st.name + "-" + std::to_string(p.index);
    p.mode = spec.mode;
    p.key = key;
    p.streams = streams();
    p.epoch = epoch;
    p.connect_timeout = options.connect_timeout;
    if (!options.stats_dir.empty()) p.stats_path = (std::filesystem::path(options.stats_dir) / (p.name + ".csv")).string();
    return p;
  }

  ComponentPlan plan_for(std::size_t stage_idx) {
    const StageSpec& st = spec.stages[stage_idx];
    ComponentPlan p = base_plan(stage_idx);
    switch (st.role) {
      case Role::Source:
        p.input = options.input.empty() ? st.input : options.input;
        p.header = st.header;
        p.chunk_records = spec.chunk_records;
        p.downstream = loopback(status[router_slot[stage_idx + 1]].in_port.load());
        break;
      case Role::Router: {
        auto bind = [&](const wire::Endpoint& ep) {
          if (options.ephemeral_ports) return loopback(0);
          return ep.is_wildcard() ? wire::Endpoint{"0.0.0.0", ep.port} : ep;
        };
        p.bind_in = bind(*st.from);
        p.bind_out = bind(*st.to);
        p.expected_upstreams = spec.stages[stage_idx - 1].workers;
        break;
      }
      case Role::Worker:
      case Role::Sink:
        p.transform = *st.transform;
        p.channel = static_cast<std::uint32_t>(stage_idx / 2 - 1);
        p.upstream = loopback(status[router_slot[stage_idx - 1]].out_port.load());
        if (st.role == Role::Worker) p.downstream = loopback(status[router_slot[stage_idx + 1]].in_port.load());
        if (st.role == Role::Sink) p.result_sink = collector_ep;
        p.memory_budget = options.memory_budget;
        p.cost_model = options.cost_model;
        p.realistic_delay = options.realistic_delay;
        if (!options.fault.wedge_stage.empty() && options.fault.wedge_stage == st.name && p.index == 0)
          p.wedge_after = std::max<std::uint64_t>(1, options.fault.after_frames);
        break;
    }
    return p;
  }

  std::size_t spawn(ComponentPlan plan) {
    if (components.size() >= kMaxComponents) fail(Errc::InvalidScale, "component limit reached");
    auto c = std::make_unique<Component>();
    c->slot = components.size();
    c->plan = std::move(plan);
    ComponentStatus& st = status[c->slot];
    enclave::TransformRegistry& reg = *registry;
    if (options.isolation == Isolation::Thread) {
      c->thread = std::thread([p = &c->plan, &st, &reg] { detail::run_component(*p, st, reg); });
    } else {
      std::fflush(nullptr);
      const pid_t pid = ::fork();
      if (pid < 0) fail(Errc::LaunchFailure, c->plan.name + ": fork failed");
      if (pid == 0) {
        detail::run_component(c->plan, st, reg);
        ::_exit(st.get_phase() == Phase::Done ? 0 : 1);
      }
      c->pid = pid;
    }
    by_stage[c->plan.stage].push_back(c->slot);
    if (c->plan.role == Role::Router) router_slot[c->plan.stage] = c->slot;
    components.push_back(std::move(c));
    return components.back()->slot;
  }

  /// Waits until the component is connected (or already finished).
  void await_ready(std::size_t slot) {
    const ComponentStatus& st = status[slot];
    const auto deadline = SteadyClock::now() + options.connect_timeout + 5s;
    for (;;) {
      const Phase p = st.get_phase();
      if (p == Phase::Failed)
        fail(Errc::LaunchFailure, components[slot]->plan.name + " failed to start: " + errc_text(st));
      if (p != Phase::Starting) return;
      if (SteadyClock::now() > deadline)
        fail(Errc::LaunchFailure, components[slot]->plan.name + " did not become ready");
      std::this_thread::sleep_for(1ms);
    }
  }

  void start_stage(std::size_t stage_idx) {
    const std::size_t n = spec.stages[stage_idx].role == Role::Router ? 1 : spec.stages[stage_idx].workers;
    std::vector<std::size_t> slots;
    for (std::size_t i = 0; i < n; ++i) slots.push_back(spawn(plan_for(stage_idx)));
    for (std::size_t s : slots) await_ready(s);
  }

  void stop_all() {
    for (auto& c : components) status[c->slot].stop = true;
    for (auto& c : components) {
      if (c->thread.joinable()) c->thread.join();
      if (c->pid > 0 && !c->reaped) {
        // grace period, then force
        for (int i = 0; i < 100 && !reap(*c, false); ++i) std::this_thread::sleep_for(10ms);
        if (!c->reaped) {
          ::kill(c->pid, SIGKILL);
          reap(*c, true);
        }
      }
    }
    collector.close();
  }

  bool reap(Component& c, bool block) {
    if (c.pid <= 0 || c.reaped) return true;
    int wstatus = 0;
    const pid_t r = ::waitpid(c.pid, &wstatus, block ? 0 : WNOHANG);
    if (r == c.pid) {
      c.reaped = true;
      // a child that died without reporting (signal, abort) counts as failed
      ComponentStatus& st = status[c.slot];
      if (!st.finished()) st.record_failure(Errc::LaunchFailure, c.plan.name + ": process exited unexpectedly");
    }
    return c.reaped;
  }

  void join_finished() {
    for (auto& c : components) {
      if (c->thread.joinable()) c->thread.join();
      reap(*c, true);
    }
  }

  std::string progress() const {
    std::ostringstream out;
    for (const auto& c : components) {
      const ComponentStatus& st = status[c->slot];
      out << c->plan.name << " " << detail::phase_name(st.get_phase()) << " in=" << st.frames_in.load()
          << " out=" << st.frames_out.load() << (st.retire.load() ? " retiring" : "") << "\n";
    }
    return out.str();
  }

  /// The stage holding the component stuck longest inside a transform, or
  /// else the first stage in the chain that has not finished.
  std::string stalled_stage() const {
    const Component* worst = nullptr;
    std::int64_t since = 0;
    for (const auto& c : components) {
      const ComponentStatus& st = status[c->slot];
      if (st.get_phase() != Phase::Processing) continue;
      if (!worst || st.phase_since.load() < since) {
        worst = c.get();
        since = st.phase_since.load();
      }
    }
    if (worst) return spec.stages[worst->plan.stage].name;
    for (std::size_t i = 0; i < spec.stages.size(); ++i)
      for (std::size_t slot : by_stage[i])
        if (!status[slot].finished()) return spec.stages[i].name;
    return spec.stages.back().name;
  }
};

Deployment::Deployment(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Deployment::Deployment(Deployment&&) noexcept = default;
Deployment& Deployment::operator=(Deployment&& other) noexcept {
  if (this != &other) {
    if (impl_) impl_->stop_all();
    impl_ = std::move(other.impl_);
  }
  return *this;
}
Deployment::~Deployment() {
  if (impl_) impl_->stop_all();
}

const PipelineSpec& Deployment::spec() const noexcept { return impl_->spec; }

std::size_t Deployment::component_count() const { return impl_->components.size(); }

std::size_t Deployment::live_components() const {
  std::size_t n = 0;
  for (const auto& c : impl_->components) {
    const Phase p = impl_->status[c->slot].get_phase();
    if (p != Phase::Starting && p != Phase::Done && p != Phase::Failed) ++n;
  }
  return n;
}

std::size_t Deployment::active_workers(std::string_view stage) const {
  const std::size_t idx = impl_->spec.index_of(stage);
  std::size_t n = 0;
  for (std::size_t slot : impl_->by_stage[idx]) {
    const ComponentStatus& st = impl_->status[slot];
    if (!st.retire.load() && !st.finished()) ++n;
  }
  return n;
}

std::string Deployment::progress() const { return impl_->progress(); }

void Deployment::scale_stage(std::string_view stage, std::size_t count) {
  Impl& d = *impl_;
  const std::size_t idx = d.spec.index_of(stage);
  const StageSpec& st = d.spec.stages[idx];
  if (st.role == Role::Source) fail(Errc::CannotScaleSource, st.name + ": sources are fixed by the input partitioning");
  if (st.role != Role::Worker) fail(Errc::InvalidScale, st.name + ": only worker stages can be scaled");
  if (count < 1) fail(Errc::InvalidScale, st.name + ": a stage needs at least one worker");

  std::vector<std::size_t> active;
  for (std::size_t slot : d.by_stage[idx])
    if (!d.status[slot].retire.load() && !d.status[slot].finished()) active.push_back(slot);

  if (count > active.size()) {
    if (d.status[d.router_slot[idx - 1]].draining.load() || d.status[d.router_slot[idx + 1]].finished())
      fail(Errc::InvalidScale, st.name + ": input already closing, too late to add workers");
    std::vector<std::size_t> added;
    for (std::size_t i = active.size(); i < count; ++i) added.push_back(d.spawn(d.plan_for(idx)));
    for (std::size_t slot : added) d.await_ready(slot);
  } else {
    // retire the newest first
    for (std::size_t i = count; i < active.size(); ++i) d.status[active[i]].retire = true;
  }
}

PipelineReport Deployment::await_completion(std::chrono::milliseconds timeout) {
  Impl& d = *impl_;
  if (d.completed) fail(Errc::LaunchFailure, "await_completion already called");
  d.completed = true;
  const auto deadline = SteadyClock::now() + timeout;

  auto timed_out = [&] {
    const std::string stage = d.stalled_stage();
    const std::string snapshot = d.progress();
    d.stop_all();
    fail(Errc::Timeout, "stage " + stage + " stalled\n" + snapshot);
  };
  auto check_failures = [&] {
    for (const auto& c : d.components) {
      d.reap(*c, false);
      const ComponentStatus& st = d.status[c->slot];
      if (st.get_phase() != Phase::Failed) continue;
      const Errc code = static_cast<Errc>(st.errc.load());
      const std::string msg = c->plan.name + ": " + st.error;
      d.stop_all();
      fail(code, msg);
    }
  };

  std::vector<wire::Frame> results;
  while (results.size() < d.expected_results) {
    check_failures();
    if (SteadyClock::now() > deadline) timed_out();
    if (auto got = d.collector.recv_for(10ms)) results.push_back(std::move(got->frame));
  }
  const auto finished_at = SteadyClock::now();
  // sinks are done; the rest finish right behind them
  for (;;) {
    check_failures();
    const bool all = std::all_of(d.components.begin(), d.components.end(),
                                 [&](const auto& c) { return d.status[c->slot].finished(); });
    if (all) break;
    if (SteadyClock::now() > deadline) timed_out();
    std::this_thread::sleep_for(2ms);
  }
  d.join_finished();
  check_failures();
  d.collector.close();

  PipelineReport report;
  report.mode = d.spec.mode;
  report.completion_time = std::chrono::duration_cast<std::chrono::nanoseconds>(finished_at - d.started);
  std::optional<enclave::ChannelCipher> cipher;
  if (d.key) cipher.emplace(*d.key);
  const auto result_channel = static_cast<std::uint32_t>((d.spec.stages.size() - 1) / 2);
  for (const auto& f : results) {
    Bytes state = f.payload;
    if (f.encrypted())
      state = cipher.value().open(result_channel, enclave::SealedBlob::parse(f.payload), f.stream_id, f.seq_no);
    report.result.merge(dataflow::ReduceState::decode(state));
  }
  for (std::size_t i = 0; i < d.spec.stages.size(); ++i) {
    StageReport sr;
    sr.name = d.spec.stages[i].name;
    sr.role = d.spec.stages[i].role;
    sr.components = d.by_stage[i].size();
    for (std::size_t slot : d.by_stage[i]) {
      const ComponentStatus& st = d.status[slot];
      sr.frames_in += st.frames_in;
      sr.per_component_in.push_back(st.frames_in);
      sr.per_component_eos.push_back(st.eos_in);
      sr.frames_out += st.frames_out;
      sr.bytes_in += st.bytes_in;
      sr.bytes_out += st.bytes_out;
      report.encrypt_calls += st.encrypt_calls;
      report.decrypt_calls += st.decrypt_calls;
      report.process_calls += st.process_calls;
      report.simulated_crossing_time += enclave::SimDuration(static_cast<double>(st.simulated_ns.load()));
    }
    report.stages.push_back(std::move(sr));
  }
  return report;
}

Deployment launch(PipelineSpec spec, LaunchOptions options, enclave::TransformRegistry& registry) {
  validate(spec, registry);
  auto impl = std::make_unique<Deployment::Impl>();
  Deployment::Impl& d = *impl;

  if (spec.mode != Mode::Clear) {
    try {
      d.key = options.key ? options.key : enclave::Key::from_env(spec.key_env.c_str());
    } catch (const Error& e) {
      fail(Errc::LaunchFailure, "key in $" + spec.key_env + " is invalid: " + e.what());
    }
    if (!d.key)
      fail(Errc::LaunchFailure, "mode " + std::string(mode_name(spec.mode)) + " needs a key in $" + spec.key_env);
  }
  for (const auto& st : spec.stages)
    if (st.role == Role::Source && (options.input.empty() ? st.input : options.input).empty())
      fail(Errc::LaunchFailure, st.name + ": no input file");
  if (!options.stats_dir.empty()) std::filesystem::create_directories(options.stats_dir);
  registry.freeze();

  d.spec = std::move(spec);
  d.options = std::move(options);
  d.registry = &registry;
  const std::size_t n = d.spec.stages.size();
  d.by_stage.resize(n);
  d.next_index.assign(n, 0);
  d.router_slot.assign(n, 0);
  d.collector_ep = d.collector.bind(loopback(0));
  d.collector_ep.host = "127.0.0.1";
  d.expected_results = d.spec.stages.back().workers;

  Deployment dep(std::move(impl));
  for (std::size_t i = 1; i < n; i += 2) d.start_stage(i);      // routers
  for (std::size_t i = 2; i + 1 < n; i += 2) d.start_stage(i);  // workers
  d.start_stage(n - 1);                                         // sinks
  d.started = SteadyClock::now();
  d.start_stage(0);  // sources
  return dep;
}

}  // namespace sealflow::pipeline
