#include "rssd/oplog/log_entry.hpp"

#include <algorithm>

#include "rssd/common/codec.hpp"
#include "rssd/common/crypto.hpp"

namespace rssd::oplog {

std::string_view to_string(EntryKind kind) {
  switch (kind) {
    case EntryKind::Write: return "Write";
    case EntryKind::Trim: return "Trim";
    case EntryKind::GcMove: return "GcMove";
    case EntryKind::OffloadSealed: return "OffloadSealed";
    case EntryKind::OffloadAcked: return "OffloadAcked";
    case EntryKind::Read: return "Read";
  }
  return "Unknown";
}

EntryBody encode_body(const LogEntry& e) {
  EntryBody b{};
  b[0] = kEntryFormatTag;
  store_be64(&b[1], e.seq);
  store_be64(&b[9], e.timestamp);
  b[17] = static_cast<std::uint8_t>(e.kind);
  std::uint8_t flags = 0;
  if (e.lpa_range) {
    flags |= 0x01;
    store_be64(&b[19], e.lpa_range->start);
    store_be64(&b[27], e.lpa_range->length);
  }
  if (e.ppa) {
    flags |= 0x02;
    store_be32(&b[35], e.ppa->channel);
    store_be32(&b[39], e.ppa->chip);
    store_be32(&b[43], e.ppa->block);
    store_be32(&b[47], e.ppa->page);
  }
  if (e.payload_digest) {
    flags |= 0x04;
    std::copy(e.payload_digest->begin(), e.payload_digest->end(), b.begin() + 51);
  }
  b[18] = flags;
  return b;
}

EntryBytes encode_entry(const LogEntry& e) {
  EntryBytes out{};
  auto body = encode_body(e);
  std::copy(body.begin(), body.end(), out.begin());
  std::copy(e.chain_hash.begin(), e.chain_hash.end(), out.begin() + kEntryBodySize);
  return out;
}

namespace {

bool all_zero(const std::uint8_t* p, std::size_t n) {
  return std::all_of(p, p + n, [](std::uint8_t b) { return b == 0; });
}

}  // namespace

std::optional<LogEntry> decode_entry(ByteView wire) {
  if (wire.size() != kEntryWireSize) return std::nullopt;
  const std::uint8_t* b = wire.data();
  if (b[0] != kEntryFormatTag) return std::nullopt;
  std::uint8_t kind = b[17];
  if (kind < 1 || kind > 6) return std::nullopt;
  std::uint8_t flags = b[18];
  if ((flags & ~0x07) != 0) return std::nullopt;

  LogEntry e;
  e.seq = load_be64(&b[1]);
  e.timestamp = load_be64(&b[9]);
  e.kind = static_cast<EntryKind>(kind);
  if (flags & 0x01) {
    e.lpa_range = LpaRange{load_be64(&b[19]), load_be64(&b[27])};
  } else if (!all_zero(&b[19], 16)) {
    return std::nullopt;
  }
  if (flags & 0x02) {
    e.ppa = nand::PhysPageAddr{load_be32(&b[35]), load_be32(&b[39]), load_be32(&b[43]),
                               load_be32(&b[47])};
  } else if (!all_zero(&b[35], 16)) {
    return std::nullopt;
  }
  if (flags & 0x04) {
    Digest d;
    std::copy(b + 51, b + 83, d.begin());
    e.payload_digest = d;
  } else if (!all_zero(&b[51], 32)) {
    return std::nullopt;
  }
  std::copy(b + kEntryBodySize, b + kEntryWireSize, e.chain_hash.begin());
  return e;
}

Digest chain_next(const Digest& prev, const EntryBody& body) {
  std::array<std::uint8_t, 32 + kEntryBodySize> buf;
  std::copy(prev.begin(), prev.end(), buf.begin());
  std::copy(body.begin(), body.end(), buf.begin() + 32);
  return sha256(buf);
}

}  // namespace rssd::oplog
