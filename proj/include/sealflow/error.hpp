#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sealflow {

enum class Errc {
  // wire
  PayloadTooLarge,
  Truncated,
  MalformedHeader,
  UnknownFlagBits,
  NoPeers,
  PeerDisconnected,
  SocketClosed,
  BindAddressInUse,
  ConnectTimeout,
  BadEndpoint,
  // routing
  StalledStream,
  // enclave
  RegistrationAfterCreate,
  DuplicateName,
  NoKey,
  BudgetUnsatisfiable,
  NonceReuse,
  AuthFailure,
  UnknownTransform,
  MemoryBudgetExceeded,
  TransformPanic,
  // dataflow
  SchemaMismatch,
  Codec,
  // pipeline
  SyntaxError,
  TopologyError,
  ModeError,
  LaunchFailure,
  UnknownStage,
  CannotScaleSource,
  InvalidScale,
  Timeout,
  // bench
  IoFailure,
  UnknownLayout,
  NoSamples,
};

std::string_view errc_name(Errc code) noexcept;

/// Exception carrying a machine-checkable error code; every module throws this.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace sealflow
