#include "rssd/common/error.hpp"

namespace rssd {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::BadAddress: return "BadAddress";
    case Errc::BadLength: return "BadLength";
    case Errc::ProgramOnProgrammed: return "ProgramOnProgrammed";
    case Errc::ReadErased: return "ReadErased";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::CapacityExhausted: return "CapacityExhausted";
    case Errc::NothingToSeal: return "NothingToSeal";
    case Errc::NothingToOffload: return "NothingToOffload";
    case Errc::AuthenticationFailed: return "AuthenticationFailed";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::VaultUnreachable: return "VaultUnreachable";
    case Errc::VaultRejected: return "VaultRejected";
    case Errc::UnknownSegment: return "UnknownSegment";
    case Errc::BadIndex: return "BadIndex";
    case Errc::UnknownDetector: return "UnknownDetector";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::TamperDetected: return "TamperDetected";
    case Errc::DataLoss: return "DataLoss";
    case Errc::TraceParseError: return "TraceParseError";
    case Errc::BindFailed: return "BindFailed";
    case Errc::ConfigError: return "ConfigError";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

namespace {

std::string compose(Errc code, const std::string& message) {
  std::string out(to_string(code));
  if (!message.empty()) {
    out += ": ";
    out += message;
  }
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::uint64_t> detail)
    : std::runtime_error(compose(code, message)), code_(code), detail_(detail) {}

}  // namespace rssd
