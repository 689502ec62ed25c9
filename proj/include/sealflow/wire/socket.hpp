#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "sealflow/wire/endpoint.hpp"
#include "sealflow/wire/frame.hpp"

namespace sealflow::wire {

struct SocketOptions {
  std::chrono::milliseconds connect_timeout{30'000};
  std::chrono::milliseconds initial_backoff{10};
  std::chrono::milliseconds max_backoff{500};
  /// Frames buffered per inbound connection before the reader stops draining TCP.
  std::size_t high_water_mark = 64;
};

/// Outbound half of a push/pull pipeline. Data frames go to one peer each in
/// round-robin order; END_OF_STREAM frames go to every peer. A socket can bind
/// (peers connect to it and join the rotation as they arrive) or connect.
///
/// A peer that sends a control END_OF_STREAM frame upstream is retired: it
/// leaves the rotation and receives a control END_OF_STREAM as its last frame.
class PushSocket {
 public:
  PushSocket();
  explicit PushSocket(SocketOptions options);
  ~PushSocket();
  PushSocket(PushSocket&&) noexcept;
  PushSocket& operator=(PushSocket&&) noexcept;

  /// Connects to every endpoint, retrying with exponential backoff until each
  /// accepts or the connect timeout passes (ConnectTimeout).
  void connect(const std::vector<Endpoint>& endpoints);
  /// Binds and accepts downstream peers in the background. Returns the bound
  /// endpoint (with the kernel-chosen port when `endpoint.port` is 0).
  Endpoint bind(const Endpoint& endpoint);

  /// Sends to peers[rr_counter mod n], then increments rr_counter. A peer whose
  /// connection fails is dropped and the frame goes to the next peer.
  /// END_OF_STREAM frames are broadcast. Throws NoPeers when none are left.
  void send(const Frame& frame);
  /// Sends to every current peer; returns how many accepted the frame.
  std::size_t broadcast(const Frame& frame);
  /// With `sticky`, peers that connect later receive the frame before anything
  /// else. Every peer gets it exactly once.
  std::size_t broadcast(const Frame& frame, bool sticky);

  std::size_t peer_count() const;
  bool wait_for_peers(std::size_t count, std::chrono::milliseconds timeout) const;
  std::uint64_t rr_counter() const;

  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// A frame together with the connection it arrived on. Connection ids are
/// assigned in connection order and never reused within one socket.
struct Delivery {
  Frame frame;
  std::size_t connection = 0;
};

/// Inbound half of a push/pull pipeline: per-connection FIFO queues, served by
/// fair queuing across connections.
class PullSocket {
 public:
  PullSocket();
  explicit PullSocket(SocketOptions options);
  ~PullSocket();
  PullSocket(PullSocket&&) noexcept;
  PullSocket& operator=(PullSocket&&) noexcept;

  /// Throws BindAddressInUse when the port is taken.
  Endpoint bind(const Endpoint& endpoint);
  void connect(const std::vector<Endpoint>& endpoints);

  /// Blocks until a frame is available. Throws SocketClosed once the socket is
  /// closed, or (for connecting sockets) once every peer hung up and all
  /// queued frames were delivered.
  Frame recv();
  Delivery recv_from();
  std::optional<Delivery> recv_for(std::chrono::milliseconds timeout);

  /// Asks every upstream peer to stop dispatching to this socket. Each peer
  /// answers with a control END_OF_STREAM after its last data frame.
  void request_retire();

  std::size_t connection_count() const;
  bool wait_for_connections(std::size_t count, std::chrono::milliseconds timeout) const;

  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrappers with the pipeline vocabulary.
PushSocket connect_push(const std::vector<Endpoint>& endpoints, SocketOptions options = {});
PullSocket bind_pull(const Endpoint& endpoint, SocketOptions options = {});

}  // namespace sealflow::wire
