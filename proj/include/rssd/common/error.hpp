#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rssd {

enum class Errc {
  // nand
  BadAddress,
  BadLength,
  ProgramOnProgrammed,
  ReadErased,
  // ftl
  OutOfRange,
  CapacityExhausted,
  // op log
  NothingToSeal,
  // offload
  NothingToOffload,
  AuthenticationFailed,
  MalformedFrame,
  VaultUnreachable,
  VaultRejected,
  // vault
  UnknownSegment,
  BadIndex,
  UnknownDetector,
  StorageFailure,
  // recovery
  TamperDetected,
  DataLoss,
  // harness / cli
  TraceParseError,
  BindFailed,
  ConfigError,
  Internal,
};

std::string_view to_string(Errc code) noexcept;

/// The single exception type used across the library. `detail` carries the
/// numeric payload of errors such as TamperDetected(seq) or
/// TraceParseError(line).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::uint64_t> detail = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::uint64_t> detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::optional<std::uint64_t> detail_;
};

}  // namespace rssd
