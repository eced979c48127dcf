#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "rssd/common/types.hpp"
#include "rssd/nand/geometry.hpp"

namespace rssd::oplog {

enum class EntryKind : std::uint8_t {
  Write = 1,
  Trim = 2,
  GcMove = 3,
  OffloadSealed = 4,
  OffloadAcked = 5,
  Read = 6,  // only with read logging enabled
};

std::string_view to_string(EntryKind kind);

struct LpaRange {
  Lpa start = 0;
  std::uint64_t length = 0;

  bool contains(Lpa lpa) const { return lpa >= start && lpa - start < length; }
  bool operator==(const LpaRange&) const = default;
};

struct LogEntry {
  Seq seq = 0;
  SimTime timestamp = 0;
  EntryKind kind = EntryKind::Write;
  std::optional<LpaRange> lpa_range;
  std::optional<nand::PhysPageAddr> ppa;
  std::optional<Digest> payload_digest;
  Digest chain_hash{};

  bool operator==(const LogEntry&) const = default;
};

// Canonical entry layout, all integers big-endian:
//
//   off  size  field
//     0     1  format tag (0x01)
//     1     8  seq
//     9     8  timestamp (ns)
//    17     1  kind
//    18     1  presence flags: bit0 lpa_range, bit1 ppa, bit2 payload_digest
//    19     8  lpa_range.start   (zero when absent)
//    27     8  lpa_range.length  (zero when absent)
//    35    16  ppa channel, chip, block, page as u32 (zero when absent)
//    51    32  payload_digest    (zero when absent)
//    83    32  chain_hash        (wire form only)
//
// chain_hash = SHA-256(previous chain_hash || bytes [0, 83)); the genesis
// predecessor is 32 zero bytes.
inline constexpr std::uint8_t kEntryFormatTag = 0x01;
inline constexpr std::size_t kEntryBodySize = 83;
inline constexpr std::size_t kEntryWireSize = kEntryBodySize + 32;

using EntryBody = std::array<std::uint8_t, kEntryBodySize>;
using EntryBytes = std::array<std::uint8_t, kEntryWireSize>;

EntryBody encode_body(const LogEntry& entry);
EntryBytes encode_entry(const LogEntry& entry);

/// Strict decode: rejects a wrong format tag, unknown kind, unknown flag
/// bits or non-zero bytes in absent fields, so that decode followed by
/// encode is the identity. Returns nullopt for non-canonical input.
std::optional<LogEntry> decode_entry(ByteView wire);

Digest chain_next(const Digest& prev, const EntryBody& body);

}  // namespace rssd::oplog
