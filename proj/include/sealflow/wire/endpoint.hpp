#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sealflow::wire {

/// A TCP endpoint. Host "*" means every local interface when binding.
struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  Endpoint() = default;
  Endpoint(std::string host, std::uint16_t port);

  /// Accepts "tcp://host:port" or "host:port".
  static Endpoint parse(std::string_view text);

  bool is_wildcard() const noexcept { return host == "*"; }
  std::string to_string() const;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

}  // namespace sealflow::wire
