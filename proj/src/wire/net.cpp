#include "net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>
#include <thread>

#include "sealflow/error.hpp"

namespace sealflow::wire::net {
namespace {

addrinfo* resolve(const Endpoint& endpoint, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  const char* host = endpoint.is_wildcard() ? nullptr : endpoint.host.c_str();
  const std::string port = std::to_string(endpoint.port);
  addrinfo* result = nullptr;
  if (int rc = ::getaddrinfo(host, port.c_str(), &hints, &result); rc != 0)
    fail(Errc::BadEndpoint, endpoint.to_string() + ": " + ::gai_strerror(rc));
  return result;
}

}  // namespace

void tune(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

int listen_on(const Endpoint& endpoint) {
  addrinfo* info = resolve(endpoint, true);
  int fd = ::socket(info->ai_family, info->ai_socktype | SOCK_CLOEXEC, info->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(info);
    fail(Errc::BadEndpoint, std::string("socket: ") + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const int rc = ::bind(fd, info->ai_addr, info->ai_addrlen);
  const int err = errno;
  ::freeaddrinfo(info);
  if (rc != 0) {
    ::close(fd);
    if (err == EADDRINUSE) fail(Errc::BindAddressInUse, endpoint.to_string());
    fail(Errc::BadEndpoint, endpoint.to_string() + ": " + std::strerror(err));
  }
  if (::listen(fd, 128) != 0) {
    const int lerr = errno;
    ::close(fd);
    if (lerr == EADDRINUSE) fail(Errc::BindAddressInUse, endpoint.to_string());
    fail(Errc::BadEndpoint, endpoint.to_string() + ": " + std::strerror(lerr));
  }
  return fd;
}

std::uint16_t local_port(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

int connect_with_retry(const Endpoint& endpoint, const SocketOptions& options) {
  const auto deadline = std::chrono::steady_clock::now() + options.connect_timeout;
  auto backoff = options.initial_backoff;
  for (;;) {
    addrinfo* info = resolve(endpoint, false);
    int fd = ::socket(info->ai_family, info->ai_socktype | SOCK_CLOEXEC, info->ai_protocol);
    if (fd >= 0 && ::connect(fd, info->ai_addr, info->ai_addrlen) == 0) {
      ::freeaddrinfo(info);
      tune(fd);
      return fd;
    }
    if (fd >= 0) ::close(fd);
    ::freeaddrinfo(info);
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) fail(Errc::ConnectTimeout, endpoint.to_string());
    std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(backoff, deadline - now));
    backoff = std::min(backoff * 2, options.max_backoff);
  }
}

Link::~Link() { ::close(fd_); }

bool Link::write_all(ByteView data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

std::size_t Link::read_some(std::uint8_t* buf, std::size_t len) {
  for (;;) {
    const ssize_t n = ::recv(fd_, buf, len, 0);
    if (n < 0 && errno == EINTR) continue;
    return n > 0 ? static_cast<std::size_t>(n) : 0;
  }
}

void Link::shutdown_write() noexcept { ::shutdown(fd_, SHUT_WR); }
void Link::shutdown_all() noexcept { ::shutdown(fd_, SHUT_RDWR); }

}  // namespace sealflow::wire::net
