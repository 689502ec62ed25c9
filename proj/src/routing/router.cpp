#include "sealflow/routing/router.hpp"

#include <algorithm>
#include <set>
#include <vector>

#include "sealflow/error.hpp"

namespace sealflow::routing {

Router::Router(RouterConfig config)
    : config_(std::move(config)), in_(config_.socket), out_(config_.socket) {
  if (config_.expected_upstreams < 1) fail(Errc::TopologyError, config_.name + ": expected_upstreams must be >= 1");
  if (config_.inbound == config_.outbound && config_.inbound.port != 0)
    fail(Errc::TopologyError, config_.name + ": inbound and outbound endpoints coincide");
  inbound_ep_ = in_.bind(config_.inbound);
  outbound_ep_ = out_.bind(config_.outbound);
}

Router::~Router() { abort(); }

void Router::abort() {
  in_.close();
  out_.close();
}

RouterReport Router::run() {
  const auto started = SteadyClock::now();
  ThroughputRecorder stats;
  if (!config_.stats_path.empty()) stats = ThroughputRecorder(config_.stats_path, config_.name, config_.epoch);

  RouterReport report;
  std::vector<std::set<std::uint32_t>> eos_by_conn;
  std::vector<std::uint64_t> eos_seq(config_.streams, 0);
  std::vector<bool> closed(config_.streams, false);
  std::uint32_t closed_count = 0;
  bool have_peer = false;

  auto ensure_peer = [&] {
    if (have_peer) return;
    if (!out_.wait_for_peers(1, config_.peer_wait))
      fail(Errc::NoPeers, config_.name + ": no downstream peer connected");
    have_peer = true;
  };

  auto try_close = [&] {
    const std::size_t conns = in_.connection_count();
    if (conns < config_.expected_upstreams || eos_by_conn.size() < conns) return;
    for (std::uint32_t s = 0; s < config_.streams; ++s) {
      if (closed[s]) continue;
      const bool all_done = std::all_of(eos_by_conn.begin(), eos_by_conn.end(),
                                        [s](const auto& seen) { return seen.contains(s); });
      if (!all_done) continue;
      ensure_peer();
      draining_ = true;
      closed[s] = true;
      ++closed_count;
      out_.broadcast(wire::Frame::eos(s, eos_seq[s]), true);
      ++report.eos_emitted;
    }
  };

  while (closed_count < config_.streams) {
    wire::Delivery d;
    if (config_.idle_timeout) {
      auto got = in_.recv_for(*config_.idle_timeout);
      if (!got) fail(Errc::StalledStream, config_.name + ": no frame for " +
                                              std::to_string(config_.idle_timeout->count()) + " ms");
      d = std::move(*got);
    } else {
      d = in_.recv_from();
    }
    wire::Frame& f = d.frame;
    if (f.is_control()) continue;
    if (eos_by_conn.size() <= d.connection) eos_by_conn.resize(d.connection + 1);
    if (f.end_of_stream()) {
      if (f.stream_id < config_.streams) {
        eos_by_conn[d.connection].insert(f.stream_id);
        eos_seq[f.stream_id] = std::max(eos_seq[f.stream_id], f.seq_no);
      }
      try_close();
      continue;
    }
    ensure_peer();
    out_.send(f);
    ++report.frames;
    report.bytes += f.payload.size();
    frames_.fetch_add(1, std::memory_order_relaxed);
    stats.add(wire::kLengthPrefixBytes + wire::kHeaderBytes + f.payload.size());
  }
  stats.finish();
  report.duration = SteadyClock::now() - started;
  finished_ = true;
  return report;
}

RouterReport run_router(RouterConfig config, std::size_t expected_upstreams) {
  config.expected_upstreams = expected_upstreams;
  Router router(std::move(config));
  return router.run();
}

}  // namespace sealflow::routing
