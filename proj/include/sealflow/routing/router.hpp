#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "sealflow/stats.hpp"
#include "sealflow/wire/socket.hpp"

namespace sealflow::routing {

struct RouterConfig {
  std::string name = "router";
  wire::Endpoint inbound;   // bound, pull side
  wire::Endpoint outbound;  // bound, push side; downstream workers connect here
  /// Upstream components that must connect and finish before streams close.
  std::size_t expected_upstreams = 1;
  /// Stream ids 0..streams-1 carried by this pipeline.
  std::uint32_t streams = 1;
  /// StalledStream when no frame arrives for this long; disabled when empty.
  std::optional<std::chrono::milliseconds> idle_timeout;
  /// How long to wait for the first downstream peer before dispatching.
  std::chrono::milliseconds peer_wait{30'000};
  std::string stats_path;  // empty: no stats
  SteadyClock::time_point epoch = SteadyClock::now();
  wire::SocketOptions socket;
};

struct RouterReport {
  std::uint64_t frames = 0;  // data frames forwarded
  std::uint64_t bytes = 0;   // payload bytes forwarded
  std::uint32_t eos_emitted = 0;
  std::chrono::nanoseconds duration{0};
};

/// Message broker between two pipeline stages. Pulls frames from upstream
/// workers and pushes them to downstream workers without looking at payloads.
///
/// A stream closes once at least `expected_upstreams` connections exist and
/// every connection seen so far has sent END_OF_STREAM for it; the router then
/// broadcasts END_OF_STREAM for that stream exactly once. It returns after all
/// streams closed. Downstream peers may join or leave at any time.
class Router {
 public:
  explicit Router(RouterConfig config);
  ~Router();

  /// Bound endpoints; the ports are the real ones when the config asked for 0.
  const wire::Endpoint& inbound_endpoint() const noexcept { return inbound_ep_; }
  const wire::Endpoint& outbound_endpoint() const noexcept { return outbound_ep_; }

  RouterReport run();
  /// Closes both sockets; a concurrent run() ends with SocketClosed.
  void abort();

  std::size_t downstream_peers() const { return out_.peer_count(); }
  std::size_t upstream_connections() const { return in_.connection_count(); }
  std::uint64_t frames_forwarded() const noexcept { return frames_.load(std::memory_order_relaxed); }
  bool finished() const noexcept { return finished_.load(); }
  /// True once the router began closing streams; new downstream workers would
  /// see no data.
  bool draining() const noexcept { return draining_.load(); }

 private:
  RouterConfig config_;
  wire::PullSocket in_;
  wire::PushSocket out_;
  wire::Endpoint inbound_ep_;
  wire::Endpoint outbound_ep_;
  std::atomic<std::uint64_t> frames_{0};
  std::atomic<bool> finished_{false};
  std::atomic<bool> draining_{false};
};

RouterReport run_router(RouterConfig config, std::size_t expected_upstreams);

}  // namespace sealflow::routing
