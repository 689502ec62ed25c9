#pragma once

// POSIX socket helpers shared by the push and pull sockets.

#include <chrono>
#include <mutex>

#include "sealflow/wire/endpoint.hpp"
#include "sealflow/wire/frame.hpp"
#include "sealflow/wire/socket.hpp"

namespace sealflow::wire::net {

int listen_on(const Endpoint& endpoint);
std::uint16_t local_port(int fd);
int connect_with_retry(const Endpoint& endpoint, const SocketOptions& options);
void tune(int fd);

/// One established TCP connection. Writes are serialized by `write_mutex`.
class Link {
 public:
  explicit Link(int fd) : fd_(fd) {}
  ~Link();
  Link(const Link&) = delete;
  Link& operator=(const Link&) = delete;

  /// Writes all bytes; false when the peer is gone.
  bool write_all(ByteView data);
  /// Reads into `buf`; returns bytes read, 0 on EOF or error.
  std::size_t read_some(std::uint8_t* buf, std::size_t len);

  void shutdown_write() noexcept;
  void shutdown_all() noexcept;

  std::mutex write_mutex;

 private:
  int fd_;
};

}  // namespace sealflow::wire::net
