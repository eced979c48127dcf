#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "rssd/common/types.hpp"

namespace rssd::offload {

enum class NackReason : std::uint8_t {
  AuthFailed = 1,
  OutOfOrder = 2,      // detail: expected segment_id
  ChainMismatch = 3,   // detail: first seq of the segment
  DigestMismatch = 4,  // detail: offending write seq
  Malformed = 5,
  Conflict = 6,        // same segment_id already stored with different content
  StorageFailure = 7,
};

std::string_view to_string(NackReason reason);

// Reply to an ingest message:
//   status u8 = 0 (Ack)  | segment_id u64
//   status u8 = 1 (Nack) | reason u8 | detail u64
inline constexpr std::uint8_t kStatusAck = 0;
inline constexpr std::uint8_t kStatusNack = 1;

struct Reply {
  enum class Kind : std::uint8_t { Ack, Nack, Unreachable };
  Kind kind = Kind::Unreachable;
  std::uint64_t segment_id = 0;  // Ack
  NackReason reason = NackReason::Malformed;
  std::uint64_t detail = 0;

  static Reply ack(std::uint64_t id) { return Reply{Kind::Ack, id, NackReason::Malformed, 0}; }
  static Reply nack(NackReason r, std::uint64_t detail = 0) { return Reply{Kind::Nack, 0, r, detail}; }
  static Reply unreachable() { return Reply{}; }
  bool operator==(const Reply&) const = default;
};

std::string to_string(const Reply& reply);

Bytes encode_reply(const Reply& reply);
/// Throws Error(MalformedFrame).
Reply decode_reply(ByteView bytes);

/// Device-side view of the link to the vault.
class VaultTransport {
 public:
  virtual ~VaultTransport() = default;
  /// Delivers one frame and waits for the vault's answer. Returns
  /// Kind::Unreachable on connection failure or timeout.
  virtual Reply send(ByteView frame) = 0;
};

}  // namespace rssd::offload
