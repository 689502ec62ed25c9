// Standalone router between two pipeline stages.
#include <CLI11.hpp>
#include <iostream>

#include "sealflow/error.hpp"
#include "sealflow/routing/router.hpp"

int main(int argc, char** argv) {
  using namespace sealflow;
  CLI::App app{"Forwards frames from upstream producers to downstream workers."};
  std::string in, out, stats, name = "router";
  std::size_t upstreams = 1;
  std::uint32_t streams = 1;
  app.add_option("--in", in, "bind endpoint for producers, e.g. tcp://*:5555")->required();
  app.add_option("--out", out, "bind endpoint for consumers, e.g. tcp://*:5556")->required();
  app.add_option("--expected-upstreams", upstreams, "producers that must finish before streams close")
      ->required()
      ->check(CLI::PositiveNumber);
  app.add_option("--streams", streams, "number of stream ids (source partitions)")->check(CLI::PositiveNumber);
  app.add_option("--stats", stats, "throughput CSV to write");
  app.add_option("--name", name, "node name in the stats file");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    routing::RouterConfig config;
    config.name = name;
    config.inbound = wire::Endpoint::parse(in);
    config.outbound = wire::Endpoint::parse(out);
    if (config.inbound.is_wildcard()) config.inbound.host = "0.0.0.0";
    if (config.outbound.is_wildcard()) config.outbound.host = "0.0.0.0";
    config.expected_upstreams = upstreams;
    config.streams = streams;
    config.stats_path = stats;
    routing::Router router(config);
    std::cerr << name << ": in " << router.inbound_endpoint().to_string() << ", out "
              << router.outbound_endpoint().to_string() << std::endl;
    const auto report = router.run();
    std::cout << name << ": forwarded " << report.frames << " frames, " << report.bytes << " bytes, "
              << report.eos_emitted << " streams closed" << std::endl;
    return 0;
  } catch (const Error& e) {
    std::cerr << name << ": " << e.what() << std::endl;
    return e.code() == Errc::BadEndpoint || e.code() == Errc::TopologyError ? 2 : 3;
  }
}
