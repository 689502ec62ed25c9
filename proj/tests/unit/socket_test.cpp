#include "sealflow/wire/socket.hpp"

#include <future>
#include <map>
#include <thread>

#include "sealflow/wire/fair_queue.hpp"
#include "test_util.hpp"

using namespace sealflow;
using namespace sealflow::wire;
using namespace std::chrono_literals;

namespace {

const Endpoint kAny{"127.0.0.1", 0};

Frame data(std::uint32_t stream, std::uint64_t seq) {
  return Frame{stream, seq, 0, {static_cast<std::uint8_t>(seq & 0xff)}};
}

std::uint16_t free_port() {
  PullSocket probe;
  return probe.bind(kAny).port;
}

}  // namespace

TEST_CASE("bind_pull on a free port and twice on the same port") {
  PullSocket first;
  const Endpoint bound = first.bind(kAny);
  CHECK(bound.port > 0);
  PullSocket second;
  CHECK_ERRC(second.bind(bound), Errc::BindAddressInUse);
}

TEST_CASE("push without peers") {
  PushSocket push;
  push.bind(kAny);
  CHECK_ERRC(push.send(data(0, 0)), Errc::NoPeers);
}

TEST_CASE("round-robin over peers in connection order") {
  PushSocket push;
  const Endpoint ep = push.bind(kAny);
  std::vector<PullSocket> pulls(3);
  for (std::size_t i = 0; i < pulls.size(); ++i) {
    pulls[i].connect({ep});
    REQUIRE(push.wait_for_peers(i + 1, 5s));
  }

  SUBCASE("6 frames") {
    for (std::uint64_t q = 1; q <= 6; ++q) push.send(data(0, q));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(pulls[i].recv().seq_no == i + 1);
      CHECK(pulls[i].recv().seq_no == i + 4);
    }
    CHECK(push.rr_counter() == 6);
  }
  SUBCASE("END_OF_STREAM is broadcast") {
    push.send(Frame::eos(0, 0));
    for (auto& p : pulls) CHECK(p.recv().end_of_stream());
  }
  SUBCASE("6000 frames split evenly") {
    std::vector<std::future<int>> counts;
    for (auto& p : pulls)
      counts.push_back(std::async(std::launch::async, [&p] {
        int n = 0;
        while (!p.recv().end_of_stream()) ++n;
        return n;
      }));
    for (std::uint64_t q = 0; q < 6000; ++q) push.send(data(0, q));
    push.send(Frame::eos(0, 6000));
    for (auto& c : counts) CHECK(c.get() == 2000);
  }
}

TEST_CASE("pull serves upstreams by fair queuing, FIFO within one") {
  PullSocket pull;
  const Endpoint ep = pull.bind(kAny);
  PushSocket a, b;
  a.connect({ep});
  REQUIRE(pull.wait_for_connections(1, 5s));
  b.connect({ep});
  REQUIRE(pull.wait_for_connections(2, 5s));
  a.send(Frame{0, 1, 0, {'a'}});
  a.send(Frame{0, 2, 0, {'a'}});
  b.send(Frame{0, 1, 0, {'b'}});
  std::this_thread::sleep_for(200ms);  // let both readers queue their frames

  std::vector<std::pair<char, std::uint64_t>> order;
  for (int i = 0; i < 3; ++i) {
    const Frame f = pull.recv();
    order.emplace_back(static_cast<char>(f.payload.at(0)), f.seq_no);
  }
  const std::vector<std::pair<char, std::uint64_t>> expected{{'a', 1}, {'b', 1}, {'a', 2}};
  CHECK(order == expected);
}

TEST_CASE("single upstream keeps order") {
  PullSocket pull;
  const Endpoint ep = pull.bind(kAny);
  PushSocket push;
  push.connect({ep});
  for (std::uint64_t q = 1; q <= 3; ++q) push.send(data(5, q));
  for (std::uint64_t q = 1; q <= 3; ++q) CHECK(pull.recv().seq_no == q);
}

TEST_CASE("fair queue stays balanced under saturated sources") {
  FairQueue<int> fq;
  const std::size_t sources = 2;
  for (std::size_t i = 0; i < sources; ++i) fq.add_source();
  std::map<std::size_t, int> delivered;
  for (std::size_t i = 0; i < sources; ++i) fq.push(i, 0);
  for (int step = 0; step < 1000; ++step) {
    auto [src, item] = *fq.pop();
    fq.push(src, item + 1);  // saturated: every source refills immediately
    ++delivered[src];
    CHECK(std::abs(delivered[0] - delivered[1]) <= 1);
  }
  CHECK(delivered[0] == 500);
  CHECK(delivered[1] == 500);
}

TEST_CASE("fair queue rotation example") {
  FairQueue<std::string> fq;
  fq.add_source();
  fq.add_source();
  fq.push(0, "a1");
  fq.push(0, "a2");
  fq.push(1, "b1");
  CHECK(fq.pop()->second == "a1");
  CHECK(fq.pop()->second == "b1");
  CHECK(fq.pop()->second == "a2");
  CHECK_FALSE(fq.pop().has_value());
}

TEST_CASE("connect retries until the peer binds") {
  const std::uint16_t port = free_port();
  const Endpoint ep{"127.0.0.1", port};
  auto pushed = std::async(std::launch::async, [ep] {
    PushSocket push = connect_push({ep});
    push.send(data(0, 9));
    push.close();
    return true;
  });
  std::this_thread::sleep_for(2s);
  PullSocket pull = bind_pull(ep);
  CHECK(pull.recv().seq_no == 9);
  CHECK(pushed.get());
}

TEST_CASE("connect gives up after the deadline") {
  SocketOptions opts;
  opts.connect_timeout = 300ms;
  const Endpoint ep{"127.0.0.1", free_port()};
  CHECK_ERRC(connect_push({ep}, opts), Errc::ConnectTimeout);
}

TEST_CASE("disconnected peer leaves the rotation") {
  PushSocket push;
  const Endpoint ep = push.bind(kAny);
  PullSocket keep, leave;
  keep.connect({ep});
  REQUIRE(push.wait_for_peers(1, 5s));
  leave.connect({ep});
  REQUIRE(push.wait_for_peers(2, 5s));
  leave.close();
  for (int i = 0; i < 200 && push.peer_count() != 1; ++i) std::this_thread::sleep_for(10ms);
  REQUIRE(push.peer_count() == 1);
  for (std::uint64_t q = 0; q < 10; ++q) push.send(data(0, q));
  for (std::uint64_t q = 0; q < 10; ++q) CHECK(keep.recv().seq_no == q);
}

TEST_CASE("retirement drains then ends the connection") {
  PushSocket push;
  const Endpoint ep = push.bind(kAny);
  PullSocket stay, retire;
  stay.connect({ep});
  REQUIRE(push.wait_for_peers(1, 5s));
  retire.connect({ep});
  REQUIRE(push.wait_for_peers(2, 5s));
  push.send(data(0, 0));  // -> stay
  push.send(data(0, 1));  // -> retire
  retire.request_retire();
  CHECK(retire.recv().seq_no == 1);
  CHECK(retire.recv().is_control());
  CHECK(push.peer_count() == 1);
  for (std::uint64_t q = 2; q < 6; ++q) push.send(data(0, q));
  for (std::uint64_t q : {0, 2, 3, 4, 5}) CHECK(stay.recv().seq_no == q);
}

TEST_CASE("closed sockets report SocketClosed") {
  SUBCASE("local close") {
    PullSocket pull;
    pull.bind(kAny);
    pull.close();
    CHECK_ERRC(pull.recv(), Errc::SocketClosed);
  }
  SUBCASE("connecting pull drains then closes when the peer leaves") {
    PushSocket push;
    const Endpoint ep = push.bind(kAny);
    PullSocket pull;
    pull.connect({ep});
    REQUIRE(push.wait_for_peers(1, 5s));
    push.send(data(0, 1));
    push.close();
    CHECK(pull.recv().seq_no == 1);
    CHECK_ERRC(pull.recv(), Errc::SocketClosed);
  }
  SUBCASE("close unblocks a waiting recv") {
    PullSocket pull;
    pull.bind(kAny);
    auto waiter = std::async(std::launch::async, [&] {
      try {
        pull.recv();
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::Truncated;
    });
    std::this_thread::sleep_for(100ms);
    pull.close();
    CHECK(waiter.get() == Errc::SocketClosed);
  }
}
