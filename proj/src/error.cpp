#include "sealflow/error.hpp"

namespace sealflow {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::Truncated: return "Truncated";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnknownFlagBits: return "UnknownFlagBits";
    case Errc::NoPeers: return "NoPeers";
    case Errc::PeerDisconnected: return "PeerDisconnected";
    case Errc::SocketClosed: return "SocketClosed";
    case Errc::BindAddressInUse: return "BindAddressInUse";
    case Errc::ConnectTimeout: return "ConnectTimeout";
    case Errc::BadEndpoint: return "BadEndpoint";
    case Errc::StalledStream: return "StalledStream";
    case Errc::RegistrationAfterCreate: return "RegistrationAfterCreate";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::NoKey: return "NoKey";
    case Errc::BudgetUnsatisfiable: return "BudgetUnsatisfiable";
    case Errc::NonceReuse: return "NonceReuse";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::UnknownTransform: return "UnknownTransform";
    case Errc::MemoryBudgetExceeded: return "MemoryBudgetExceeded";
    case Errc::TransformPanic: return "TransformPanic";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::Codec: return "Codec";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::TopologyError: return "TopologyError";
    case Errc::ModeError: return "ModeError";
    case Errc::LaunchFailure: return "LaunchFailure";
    case Errc::UnknownStage: return "UnknownStage";
    case Errc::CannotScaleSource: return "CannotScaleSource";
    case Errc::InvalidScale: return "InvalidScale";
    case Errc::Timeout: return "Timeout";
    case Errc::IoFailure: return "IoFailure";
    case Errc::UnknownLayout: return "UnknownLayout";
    case Errc::NoSamples: return "NoSamples";
  }
  return "Unknown";
}

}  // namespace sealflow
