#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "rssd/common/codec.hpp"
#include "rssd/common/types.hpp"
#include "rssd/oplog/log_entry.hpp"

namespace rssd::oplog {

/// A run of contiguous entries. Sealed segments are the unit of offload
/// and verification.
struct LogSegment {
  std::uint64_t segment_id = 0;
  Seq first_seq = 0;
  Seq last_seq = 0;
  Digest head_hash{};  // chain_hash of the entry before first_seq
  Digest tail_hash{};  // chain_hash of last_seq
  std::vector<LogEntry> entries;
  bool sealed = false;

  // Segment header on the wire: segment_id u64, first_seq u64, last_seq u64,
  // head_hash[32], tail_hash[32], entry_count u32, then entry_count
  // canonical entries of kEntryWireSize bytes.
  static constexpr std::size_t kHeaderSize = 8 + 8 + 8 + 32 + 32 + 4;

  void encode_to(Bytes& out) const;
  Bytes encode() const;
  /// Decodes one segment from the reader; entries are decoded strictly.
  static LogSegment decode(ByteReader& reader);

  bool operator==(const LogSegment&) const = default;
};

/// Result of chain verification: ok, or the first position where the
/// recomputed chain diverges from the stored one.
struct ChainCheck {
  std::optional<Seq> tamper_at;

  bool ok() const { return !tamper_at.has_value(); }
  static ChainCheck good() { return {}; }
  static ChainCheck tampered(Seq seq) { return ChainCheck{seq}; }
};

/// Verifies raw wire entries (count * kEntryWireSize bytes). The entry at
/// position i must carry seq expected_first_seq + i and a chain hash that
/// recomputes from its predecessor. A divergence at position i is reported
/// as TamperAt(expected_first_seq + i); reordering two entries therefore
/// reports the smaller of their seqs. On success, *tail_out (if given)
/// receives the final chain hash.
ChainCheck verify_raw_entries(ByteView raw, const Digest& expected_head, Seq expected_first_seq,
                              Digest* tail_out = nullptr);

ChainCheck verify_chain(std::span<const LogEntry> entries, const Digest& expected_head,
                        Seq expected_first_seq);

/// Verifies entries and header fields of a segment. A header that
/// disagrees with its entries is reported at the segment's first seq.
ChainCheck verify_segment(const LogSegment& segment, const Digest& expected_head);

struct SealPolicy {
  std::size_t max_entries = 1024;
  SimTime max_age = 5 * kNanosPerMinute;
};

/// Append-only hash-chained journal of device operations.
///
/// append() is called from the FTL's serialized command path. Sealed
/// segments stay resident until the offload path reports them durable in
/// the vault (release_through).
class OpLog {
 public:
  explicit OpLog(SealPolicy policy = {}, bool enabled = true);

  bool enabled() const { return enabled_; }

  /// Appends an entry with the next seq. When logging is disabled only the
  /// sequence counter advances and nothing is retained.
  LogEntry append(EntryKind kind, std::optional<LpaRange> lpa_range,
                  std::optional<nand::PhysPageAddr> ppa, std::optional<Digest> payload_digest,
                  SimTime timestamp);

  /// Freezes the open entries. Throws Error(NothingToSeal) when empty.
  LogSegment seal_segment();

  Seq last_seq() const;
  Digest tail_hash() const;
  std::size_t open_entries() const;

  /// Sealed segments with id > after_id that are still resident.
  std::vector<LogSegment> sealed_after(std::uint64_t after_id) const;
  std::uint64_t last_sealed_id() const;
  /// Drops resident sealed segments with id <= segment_id.
  void release_through(std::uint64_t segment_id);

  /// All resident entries (unreleased sealed segments followed by the open
  /// segment) in seq order, with the chain hash preceding the first one.
  struct Resident {
    Digest head_hash{};
    std::vector<LogEntry> entries;
  };
  Resident resident() const;

  /// Bytes of canonical entries appended so far (for log-page accounting).
  std::uint64_t bytes_logged() const;

 private:
  LogSegment seal_locked();

  mutable std::mutex mutex_;
  SealPolicy policy_;
  bool enabled_;
  Seq next_seq_ = 1;
  Digest tail_{};
  std::uint64_t next_segment_id_ = 1;
  LogSegment open_;
  std::deque<LogSegment> sealed_;
  std::uint64_t bytes_logged_ = 0;
};

}  // namespace rssd::oplog
