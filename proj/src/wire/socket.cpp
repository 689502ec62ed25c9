#include "sealflow/wire/socket.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "net.hpp"
#include "sealflow/error.hpp"

namespace sealflow::wire {
namespace {

constexpr std::size_t kReadChunk = 64 * 1024;

/// Accepts connections on a listening fd until the fd is shut down.
class Acceptor {
 public:
  template <class OnAccept>
  void start(int listen_fd, OnAccept on_accept) {
    fd_ = listen_fd;
    thread_ = std::thread([this, on_accept = std::move(on_accept)] {
      for (;;) {
        const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) {
          if (errno == EINTR || errno == ECONNABORTED) continue;
          return;
        }
        net::tune(fd);
        on_accept(fd);
      }
    });
  }

  void stop() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    if (thread_.joinable()) thread_.join();
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  ~Acceptor() { stop(); }

 private:
  int fd_ = -1;
  std::thread thread_;
};

}  // namespace

// ---------------------------------------------------------------- PushSocket

struct PushSocket::Impl {
  struct Peer {
    std::shared_ptr<net::Link> link;
    bool retired = false;  // guarded by link->write_mutex
    std::atomic<bool> dead{false};
    std::thread reader;
  };

  SocketOptions options;
  mutable std::mutex mutex;
  mutable std::condition_variable peers_changed;
  std::vector<std::shared_ptr<Peer>> rotation;  // connection order
  std::vector<std::shared_ptr<Peer>> all;       // every peer ever added, for shutdown
  std::uint64_t rr = 0;
  bool closed = false;
  Bytes replay;  // sticky broadcasts, written to every later peer first
  Acceptor acceptor;

  void remove_from_rotation(const Peer* peer) {
    std::lock_guard lock(mutex);
    std::erase_if(rotation, [&](const auto& p) { return p.get() == peer; });
    peers_changed.notify_all();
  }

  void retire(const std::shared_ptr<Peer>& peer) {
    remove_from_rotation(peer.get());
    std::lock_guard write_lock(peer->link->write_mutex);
    if (peer->retired) return;
    peer->retired = true;
    const Bytes marker = encode_frame(Frame::eos(kControlStream, 0));
    if (!peer->link->write_all(marker)) peer->dead = true;
  }

  void add(int fd) {
    auto peer = std::make_shared<Peer>();
    peer->link = std::make_shared<net::Link>(fd);
    std::weak_ptr<Peer> weak = peer;
    {
      std::unique_lock lock(mutex);
      if (closed) {
        peer->link->shutdown_all();
        return;
      }
      std::lock_guard write_lock(peer->link->write_mutex);
      rotation.push_back(peer);
      all.push_back(peer);
      const Bytes pending = replay;
      lock.unlock();
      if (!pending.empty() && !peer->link->write_all(pending)) peer->dead = true;
    }
    // Reverse direction carries only retirement requests; EOF means the peer left.
    peer->reader = std::thread([this, weak] {
      auto self = weak.lock();
      if (!self) return;
      FrameReader reader;
      std::vector<std::uint8_t> buf(4096);
      for (;;) {
        const std::size_t n = self->link->read_some(buf.data(), buf.size());
        if (n == 0) break;
        try {
          reader.feed(ByteView(buf.data(), n));
          while (auto f = reader.next())
            if (f->is_control()) retire(self);
        } catch (const Error&) {
          break;
        }
      }
      self->dead = true;
      remove_from_rotation(self.get());
    });
    peers_changed.notify_all();
  }

  std::shared_ptr<Peer> pick() {
    std::lock_guard lock(mutex);
    if (closed) fail(Errc::SocketClosed, "push socket closed");
    if (rotation.empty()) fail(Errc::NoPeers, "push socket has no connected peers");
    auto peer = rotation[rr % rotation.size()];
    ++rr;
    return peer;
  }

  bool write_to(Peer& peer, ByteView bytes) {
    std::lock_guard write_lock(peer.link->write_mutex);
    if (peer.retired || peer.dead) return false;
    if (!peer.link->write_all(bytes)) {
      peer.dead = true;
      return false;
    }
    return true;
  }

  void shutdown() {
    std::vector<std::shared_ptr<Peer>> peers;
    {
      std::lock_guard lock(mutex);
      if (closed) return;
      closed = true;
      peers = all;
      rotation.clear();
    }
    acceptor.stop();
    for (auto& p : peers) {
      {
        std::lock_guard write_lock(p->link->write_mutex);
        p->link->shutdown_write();
      }
      p->link->shutdown_all();
    }
    for (auto& p : peers)
      if (p->reader.joinable()) p->reader.join();
    peers_changed.notify_all();
  }
};

PushSocket::PushSocket() : PushSocket(SocketOptions{}) {}
PushSocket::PushSocket(SocketOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = options;
}
PushSocket::~PushSocket() {
  if (impl_) impl_->shutdown();
}
PushSocket::PushSocket(PushSocket&&) noexcept = default;
PushSocket& PushSocket::operator=(PushSocket&& other) noexcept {
  if (this != &other) {
    if (impl_) impl_->shutdown();
    impl_ = std::move(other.impl_);
  }
  return *this;
}

void PushSocket::connect(const std::vector<Endpoint>& endpoints) {
  for (const auto& ep : endpoints) impl_->add(net::connect_with_retry(ep, impl_->options));
}

Endpoint PushSocket::bind(const Endpoint& endpoint) {
  const int fd = net::listen_on(endpoint);
  Endpoint bound{endpoint.host, net::local_port(fd)};
  impl_->acceptor.start(fd, [impl = impl_.get()](int conn) { impl->add(conn); });
  return bound;
}

void PushSocket::send(const Frame& frame) {
  if (frame.end_of_stream()) {
    if (broadcast(frame) == 0) fail(Errc::NoPeers, "no peer accepted END_OF_STREAM");
    return;
  }
  const Bytes bytes = encode_frame(frame);
  for (;;) {
    auto peer = impl_->pick();
    if (impl_->write_to(*peer, bytes)) return;
    // Retired or disconnected: drop it and re-dispatch to the next peer.
    impl_->remove_from_rotation(peer.get());
  }
}

std::size_t PushSocket::broadcast(const Frame& frame) { return broadcast(frame, false); }

std::size_t PushSocket::broadcast(const Frame& frame, bool sticky) {
  const Bytes bytes = encode_frame(frame);
  std::vector<std::shared_ptr<Impl::Peer>> peers;
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->closed) fail(Errc::SocketClosed, "push socket closed");
    peers = impl_->rotation;
    if (sticky) impl_->replay.insert(impl_->replay.end(), bytes.begin(), bytes.end());
  }
  std::size_t delivered = 0;
  for (auto& p : peers) {
    if (impl_->write_to(*p, bytes))
      ++delivered;
    else
      impl_->remove_from_rotation(p.get());
  }
  return delivered;
}

std::size_t PushSocket::peer_count() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->rotation.size();
}

bool PushSocket::wait_for_peers(std::size_t count, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(impl_->mutex);
  return impl_->peers_changed.wait_for(lock, timeout, [&] { return impl_->rotation.size() >= count; });
}

std::uint64_t PushSocket::rr_counter() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->rr;
}

void PushSocket::close() {
  if (impl_) impl_->shutdown();
}

// ---------------------------------------------------------------- PullSocket

struct PullSocket::Impl {
  struct Inbound {
    std::shared_ptr<net::Link> link;
    std::deque<Frame> queue;
    bool eof = false;
    std::thread reader;
  };

  SocketOptions options;
  mutable std::mutex mutex;
  mutable std::condition_variable readable;
  std::condition_variable writable;
  std::vector<std::unique_ptr<Inbound>> conns;  // index = connection id
  std::size_t next = 0;                         // fair-queue scan start
  bool closed = false;
  bool connecting = false;
  Acceptor acceptor;

  void add(int fd) {
    std::unique_lock lock(mutex);
    auto link = std::make_shared<net::Link>(fd);
    if (closed) {
      link->shutdown_all();
      return;
    }
    conns.push_back(std::make_unique<Inbound>());
    Inbound* in = conns.back().get();
    in->link = link;
    in->reader = std::thread([this, in] { read_loop(*in); });
    readable.notify_all();
  }

  void read_loop(Inbound& in) {
    FrameReader reader;
    std::vector<std::uint8_t> buf(kReadChunk);
    for (;;) {
      const std::size_t n = in.link->read_some(buf.data(), buf.size());
      if (n == 0) break;
      try {
        reader.feed(ByteView(buf.data(), n));
        while (auto f = reader.next()) {
          std::unique_lock lock(mutex);
          writable.wait(lock, [&] { return closed || in.queue.size() < options.high_water_mark; });
          if (closed) return;
          in.queue.push_back(std::move(*f));
          readable.notify_all();
        }
      } catch (const Error&) {
        break;  // malformed stream: treat as a broken connection
      }
    }
    std::lock_guard lock(mutex);
    in.eof = true;
    readable.notify_all();
  }

  // Caller holds `mutex`.
  std::optional<Delivery> try_pop() {
    const std::size_t n = conns.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (next + k) % n;
      auto& q = conns[i]->queue;
      if (!q.empty()) {
        Delivery d{std::move(q.front()), i};
        q.pop_front();
        next = (i + 1) % n;
        writable.notify_all();
        return d;
      }
    }
    return std::nullopt;
  }

  bool exhausted() const {
    if (!connecting || conns.empty()) return false;
    return std::all_of(conns.begin(), conns.end(),
                       [](const auto& c) { return c->eof && c->queue.empty(); });
  }

  void shutdown() {
    std::vector<Inbound*> inbound;
    {
      std::lock_guard lock(mutex);
      if (closed) return;
      closed = true;
      for (auto& c : conns) inbound.push_back(c.get());
      readable.notify_all();
      writable.notify_all();
    }
    acceptor.stop();
    for (auto* c : inbound) c->link->shutdown_all();
    for (auto* c : inbound)
      if (c->reader.joinable()) c->reader.join();
  }
};

PullSocket::PullSocket() : PullSocket(SocketOptions{}) {}
PullSocket::PullSocket(SocketOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = options;
}
PullSocket::~PullSocket() {
  if (impl_) impl_->shutdown();
}
PullSocket::PullSocket(PullSocket&&) noexcept = default;
PullSocket& PullSocket::operator=(PullSocket&& other) noexcept {
  if (this != &other) {
    if (impl_) impl_->shutdown();
    impl_ = std::move(other.impl_);
  }
  return *this;
}

Endpoint PullSocket::bind(const Endpoint& endpoint) {
  const int fd = net::listen_on(endpoint);
  Endpoint bound{endpoint.host, net::local_port(fd)};
  impl_->acceptor.start(fd, [impl = impl_.get()](int conn) { impl->add(conn); });
  return bound;
}

void PullSocket::connect(const std::vector<Endpoint>& endpoints) {
  {
    std::lock_guard lock(impl_->mutex);
    impl_->connecting = true;
  }
  for (const auto& ep : endpoints) impl_->add(net::connect_with_retry(ep, impl_->options));
}

Delivery PullSocket::recv_from() {
  std::unique_lock lock(impl_->mutex);
  for (;;) {
    if (impl_->closed) fail(Errc::SocketClosed, "pull socket closed");
    if (auto d = impl_->try_pop()) return std::move(*d);
    if (impl_->exhausted()) fail(Errc::SocketClosed, "every upstream peer disconnected");
    impl_->readable.wait(lock);
  }
}

Frame PullSocket::recv() { return recv_from().frame; }

std::optional<Delivery> PullSocket::recv_for(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::unique_lock lock(impl_->mutex);
  for (;;) {
    if (impl_->closed) fail(Errc::SocketClosed, "pull socket closed");
    if (auto d = impl_->try_pop()) return d;
    if (impl_->exhausted()) fail(Errc::SocketClosed, "every upstream peer disconnected");
    if (impl_->readable.wait_until(lock, deadline) == std::cv_status::timeout) {
      if (auto d = impl_->try_pop()) return d;
      return std::nullopt;
    }
  }
}

void PullSocket::request_retire() {
  std::vector<std::shared_ptr<net::Link>> links;
  {
    std::lock_guard lock(impl_->mutex);
    for (auto& c : impl_->conns)
      if (!c->eof) links.push_back(c->link);
  }
  const Bytes request = encode_frame(Frame::eos(kControlStream, 0));
  for (auto& link : links) {
    std::lock_guard write_lock(link->write_mutex);
    link->write_all(request);
  }
}

std::size_t PullSocket::connection_count() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->conns.size();
}

bool PullSocket::wait_for_connections(std::size_t count, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(impl_->mutex);
  return impl_->readable.wait_for(lock, timeout, [&] { return impl_->conns.size() >= count; });
}

void PullSocket::close() {
  if (impl_) impl_->shutdown();
}

PushSocket connect_push(const std::vector<Endpoint>& endpoints, SocketOptions options) {
  PushSocket s(options);
  s.connect(endpoints);
  return s;
}

PullSocket bind_pull(const Endpoint& endpoint, SocketOptions options) {
  PullSocket s(options);
  s.bind(endpoint);
  return s;
}

}  // namespace sealflow::wire
