#include "sealflow/wire/endpoint.hpp"

#include <charconv>

#include "sealflow/error.hpp"

namespace sealflow::wire {

Endpoint::Endpoint(std::string host_, std::uint16_t port_) : host(std::move(host_)), port(port_) {
  if (host.empty()) fail(Errc::BadEndpoint, "empty host");
}

Endpoint Endpoint::parse(std::string_view text) {
  std::string_view rest = text;
  if (rest.starts_with("tcp://")) rest.remove_prefix(6);
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == rest.size())
    fail(Errc::BadEndpoint, "expected tcp://host:port, got '" + std::string(text) + "'");
  const std::string_view port_text = rest.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value == 0 || value > 65535)
    fail(Errc::BadEndpoint, "bad port in '" + std::string(text) + "'");
  return Endpoint(std::string(rest.substr(0, colon)), static_cast<std::uint16_t>(value));
}

std::string Endpoint::to_string() const { return "tcp://" + host + ":" + std::to_string(port); }

}  // namespace sealflow::wire
