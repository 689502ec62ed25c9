#include "component.hpp"

#include <cstring>
#include <fstream>
#include <set>
#include <thread>

#include "sealflow/error.hpp"
#include "sealflow/routing/router.hpp"
#include "sealflow/wire/frame.hpp"
#include "sealflow/wire/socket.hpp"

namespace sealflow::pipeline::detail {

namespace {

using namespace std::chrono_literals;

constexpr auto kPoll = 20ms;

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(SteadyClock::now().time_since_epoch()).count();
}

/// Thrown inside a component when the launcher asked it to stop.
struct Stopped {};

void check_stop(const ComponentStatus& status) {
  if (status.stop.load()) throw Stopped{};
}

wire::SocketOptions socket_options(const ComponentPlan& plan) {
  wire::SocketOptions o;
  o.connect_timeout = plan.connect_timeout;
  return o;
}

ThroughputRecorder recorder(const ComponentPlan& plan) {
  if (plan.stats_path.empty()) return {};
  return ThroughputRecorder(plan.stats_path, plan.name, plan.epoch);
}

// ---------------------------------------------------------------- source

/// Streams the lines whose first byte lies in [begin, end) of the file, so
/// the partitions are equal-sized byte ranges aligned to line starts.
void run_source(const ComponentPlan& plan, ComponentStatus& status) {
  std::ifstream in(plan.input, std::ios::binary);
  if (!in) fail(Errc::IoFailure, plan.name + ": cannot open " + plan.input);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  const std::uint64_t begin = size * plan.index / plan.streams;
  const std::uint64_t end = size * (plan.index + 1) / plan.streams;

  std::string line;
  std::uint64_t offset = 0;
  if (begin == 0) {
    in.seekg(0);
    if (plan.header && std::getline(in, line)) offset = static_cast<std::uint64_t>(in.tellg());
    if (!in) offset = size;
  } else {
    // a line starting exactly at `begin` belongs here, so look from begin-1
    in.seekg(static_cast<std::streamoff>(begin - 1));
    std::getline(in, line);
    offset = in ? static_cast<std::uint64_t>(in.tellg()) : size;
  }

  wire::PushSocket push(socket_options(plan));
  push.connect({plan.downstream.value()});
  status.set_phase(Phase::Ready);

  std::optional<enclave::ChannelCipher> cipher;
  if (plan.mode != Mode::Clear) cipher.emplace(plan.key.value());
  ThroughputRecorder stats = recorder(plan);

  const std::uint32_t s = plan.index;
  std::uint64_t seq = 0;
  std::string chunk;
  std::size_t lines = 0;
  auto flush = [&] {
    if (lines == 0) return;
    check_stop(status);
    wire::Frame f{s, seq, 0, {}};
    if (cipher) {
      f.payload = cipher->seal(0, as_bytes(chunk), s, seq).serialize();
      f.flags = wire::kEncrypted;
      status.encrypt_calls = cipher->encrypt_calls();
    } else {
      f.payload.assign(chunk.begin(), chunk.end());
    }
    status.set_phase(Phase::Sending);
    push.send(f);
    ++seq;
    status.frames_out.fetch_add(1);
    status.bytes_out.fetch_add(f.payload.size());
    stats.add(f.payload.size());
    chunk.clear();
    lines = 0;
  };

  while (offset < end && offset < size && std::getline(in, line)) {
    offset += line.size() + 1;
    chunk += line;
    chunk += '\n';
    if (++lines == plan.chunk_records) flush();
  }
  flush();
  // every producer closes every stream
  for (std::uint32_t t = 0; t < plan.streams; ++t) push.send(wire::Frame::eos(t, t == s ? seq : 0));
  stats.finish();
}

// ---------------------------------------------------------------- router

void run_router(const ComponentPlan& plan, ComponentStatus& status) {
  routing::RouterConfig rc;
  rc.name = plan.name;
  rc.inbound = plan.bind_in;
  rc.outbound = plan.bind_out;
  rc.expected_upstreams = plan.expected_upstreams;
  rc.streams = plan.streams;
  rc.stats_path = plan.stats_path;
  rc.epoch = plan.epoch;
  rc.socket = socket_options(plan);
  routing::Router router(rc);
  status.in_port = router.inbound_endpoint().port;
  status.out_port = router.outbound_endpoint().port;
  status.set_phase(Phase::Ready);

  std::atomic<bool> done{false};
  routing::RouterReport report;
  std::exception_ptr error;
  std::thread runner([&] {
    try {
      report = router.run();
    } catch (...) {
      error = std::current_exception();
    }
    done = true;
  });
  bool stopped = false;
  while (!done.load()) {
    if (status.stop.load() && !stopped) {
      stopped = true;
      router.abort();
    }
    const auto n = router.frames_forwarded();
    status.frames_in = n;
    status.frames_out = n;
    if (router.draining()) status.draining = true;
    std::this_thread::sleep_for(5ms);
  }
  runner.join();
  if (stopped) throw Stopped{};
  if (error) std::rethrow_exception(error);
  status.draining = true;
  status.frames_in = report.frames;
  status.frames_out = report.frames;
  status.bytes_in = report.bytes;
  status.bytes_out = report.bytes;
}

// ---------------------------------------------------------------- worker / sink

/// The three ways of applying a transform to one frame payload.
class Processor {
 public:
  Processor(const ComponentPlan& plan, enclave::TransformRegistry& registry, bool stateful) : plan_(plan) {
    if (plan.mode == Mode::Enclave) {
      enclave::EnclaveConfig ec;
      ec.memory_budget = plan.memory_budget;
      ec.crossing_cost = plan.cost_model;
      ec.key = plan.key;
      ec.channel = plan.channel;
      ec.realistic_delay = plan.realistic_delay;
      session_.emplace(enclave::EnclaveSession::create(ec, registry));
      if (stateful) handle_ = session_->open_state();
    } else {
      table_ = registry.freeze();
      auto it = table_->find(plan.transform);
      if (it == table_->end()) fail(Errc::UnknownTransform, plan.name + ": no transform " + plan.transform);
      def_ = &it->second;
      if (plan.mode == Mode::Encrypted) cipher_.emplace(plan.key.value());
    }
  }

  /// Returns the outbound payload; empty means nothing to forward.
  Bytes apply(const wire::Frame& f) {
    if (session_) {
      auto result = session_->sgxprocess(plan_.transform, enclave::SealedBlob::parse(f.payload), handle_, f.stream_id,
                                         f.seq_no);
      if (result.output.ciphertext.empty()) return {};
      return result.output.serialize();
    }
    enclave::HeapArena arena;
    enclave::TransformContext ctx(&state_, arena);
    if (!cipher_) return def_->fn(ctx, f.payload);
    const Bytes plain = cipher_->open(plan_.channel, enclave::SealedBlob::parse(f.payload), f.stream_id, f.seq_no);
    const Bytes out = def_->fn(ctx, plain);
    if (out.empty()) return {};
    return cipher_->seal(plan_.channel + 1, out, f.stream_id, f.seq_no).serialize();
  }

  /// The final reducer state as a result payload, sealed for the sink owner
  /// when the mode encrypts.
  Bytes final_state(std::uint64_t seq) {
    if (session_) return session_->seal_state(handle_, seq).serialize();
    if (cipher_) return cipher_->seal(plan_.channel + 1, state_.encode(), wire::kResultStream, seq).serialize();
    return state_.encode();
  }

  void publish(ComponentStatus& status) const {
    if (session_) {
      const auto& m = session_->metrics();
      status.encrypt_calls = m.encrypt_calls;
      status.decrypt_calls = m.decrypt_calls;
      status.process_calls = m.process_calls;
      status.simulated_ns = static_cast<std::uint64_t>(m.simulated_crossing_time.count());
    } else if (cipher_) {
      status.encrypt_calls = cipher_->encrypt_calls();
      status.decrypt_calls = cipher_->decrypt_calls();
    }
  }

 private:
  const ComponentPlan& plan_;
  std::optional<enclave::EnclaveSession> session_;
  enclave::StateHandle handle_;
  std::shared_ptr<const enclave::TransformTable> table_;
  const enclave::TransformDef* def_ = nullptr;
  std::optional<enclave::ChannelCipher> cipher_;
  dataflow::ReduceState state_;
};

void run_worker(const ComponentPlan& plan, ComponentStatus& status, enclave::TransformRegistry& registry) {
  const bool sink = plan.role == Role::Sink;
  Processor proc(plan, registry, sink);
  const std::uint8_t out_flags = plan.mode == Mode::Clear ? 0 : wire::kEncrypted;

  wire::PushSocket push(socket_options(plan));
  if (plan.downstream) push.connect({*plan.downstream});
  wire::PullSocket pull(socket_options(plan));
  pull.connect({plan.upstream});
  status.set_phase(Phase::Ready);
  ThroughputRecorder stats = recorder(plan);

  std::set<std::uint32_t> eos_seen;
  bool retire_sent = false;
  while (eos_seen.size() < plan.streams) {
    check_stop(status);
    if (status.retire.load() && !retire_sent) {
      pull.request_retire();
      retire_sent = true;
    }
    status.set_phase(Phase::Waiting);
    std::optional<wire::Delivery> d;
    try {
      d = pull.recv_for(kPoll);
    } catch (const Error& e) {
      if (e.code() == Errc::SocketClosed) break;  // upstream went away after its last frame
      throw;
    }
    if (!d) continue;
    const wire::Frame& f = d->frame;
    if (f.is_control()) break;  // drained after retirement
    if (f.end_of_stream()) {
      status.eos_in.fetch_add(1);
      if (f.stream_id < plan.streams && eos_seen.insert(f.stream_id).second && plan.downstream)
        push.send(wire::Frame::eos(f.stream_id, f.seq_no));
      continue;
    }
    status.frames_in.fetch_add(1);
    status.bytes_in.fetch_add(f.payload.size());

    status.set_phase(Phase::Processing);
    if (plan.wedge_after != 0 && status.frames_in.load() >= plan.wedge_after)
      for (;;) {
        check_stop(status);
        std::this_thread::sleep_for(kPoll);
      }
    Bytes out = proc.apply(f);
    proc.publish(status);
    if (out.empty() || !plan.downstream) continue;
    status.set_phase(Phase::Sending);
    const std::size_t n = out.size();
    push.send(wire::Frame{f.stream_id, f.seq_no, out_flags, std::move(out)});
    status.frames_out.fetch_add(1);
    status.bytes_out.fetch_add(n);
    stats.add(n);
  }
  // a retired worker closes the streams it never saw end
  if (plan.downstream)
    for (std::uint32_t s = 0; s < plan.streams; ++s)
      if (!eos_seen.contains(s)) push.send(wire::Frame::eos(s, 0));

  if (sink) {
    Bytes result = proc.final_state(plan.index);
    proc.publish(status);
    wire::PushSocket out(socket_options(plan));
    out.connect({plan.result_sink.value()});
    out.send(wire::Frame{wire::kResultStream, plan.index, out_flags, std::move(result)});
    out.close();
  }
  stats.finish();
}

}  // namespace

const char* phase_name(Phase p) noexcept {
  switch (p) {
    case Phase::Starting: return "starting";
    case Phase::Ready: return "ready";
    case Phase::Waiting: return "waiting";
    case Phase::Processing: return "processing";
    case Phase::Sending: return "sending";
    case Phase::Done: return "done";
    case Phase::Failed: return "failed";
  }
  return "?";
}

void ComponentStatus::set_phase(Phase p) {
  if (phase.load() == static_cast<int>(p)) return;
  phase_since = now_ns();
  phase = static_cast<int>(p);
}

void ComponentStatus::record_failure(Errc code, const std::string& message) {
  errc = static_cast<int>(code);
  std::strncpy(error, message.c_str(), sizeof(error) - 1);
  set_phase(Phase::Failed);
}

void run_component(const ComponentPlan& plan, ComponentStatus& status, enclave::TransformRegistry& registry) {
  status.set_phase(Phase::Starting);
  try {
    switch (plan.role) {
      case Role::Source: run_source(plan, status); break;
      case Role::Router: run_router(plan, status); break;
      case Role::Worker:
      case Role::Sink: run_worker(plan, status, registry); break;
    }
    status.set_phase(Phase::Done);
  } catch (const Stopped&) {
    status.record_failure(Errc::Timeout, plan.name + ": stopped");
  } catch (const Error& e) {
    status.record_failure(e.code(), e.what());
  } catch (const std::exception& e) {
    status.record_failure(Errc::LaunchFailure, plan.name + ": " + e.what());
  }
}

}  // namespace sealflow::pipeline::detail
