#pragma once

#include <cstdint>
#include <vector>

#include "rssd/common/crypto.hpp"
#include "rssd/common/types.hpp"
#include "rssd/oplog/op_log.hpp"

namespace rssd::offload {

struct PageRecord {
  Seq write_seq = 0;
  Lpa lpa = 0;
  SimTime timestamp = 0;
  Bytes data;

  bool operator==(const PageRecord&) const = default;
};

/// A time-ordered bundle of retained page versions and sealed log segments.
struct OffloadSegment {
  std::uint64_t segment_id = 0;
  Digest prev_tail_hash{};  // chain hash preceding the first included log entry
  std::uint32_t page_size = 0;
  std::vector<oplog::LogSegment> log_segments;
  std::vector<PageRecord> page_records;  // strictly ascending write_seq

  Seq first_seq() const;  // first included log seq, 0 if none
  Seq last_seq() const;
  bool operator==(const OffloadSegment&) const = default;
};

// Canonical serialization, big-endian:
//   version u8 | segment_id u64 | prev_tail_hash[32] | page_size u32 |
//   log_segment_count u32 | log segments |
//   page_record_count u32 | { write_seq u64, lpa u64, timestamp u64, page bytes }
inline constexpr std::uint8_t kSegmentFormatVersion = 1;

Bytes encode_segment(const OffloadSegment& segment);
/// Strict decode; trailing bytes or inconsistent counts throw
/// Error(MalformedFrame).
OffloadSegment decode_segment(ByteView bytes);

/// Checks page-record ordering and page sizes. Returns an empty string when
/// well formed, otherwise a description of the first problem.
std::string check_segment_shape(const OffloadSegment& segment);

/// Digest binding a segment's page records: SHA-256 over segment_id and,
/// per record, write_seq, lpa, timestamp and SHA-256 of the bytes. Carried
/// by the OffloadSealed log entry that closes the segment.
Digest bundle_digest(std::uint64_t segment_id, const std::vector<PageRecord>& records);

// Frame layout:
//   off  size  field
//     0     4  magic "RSSD"
//     4     1  format version (1)
//     5     8  segment_id
//    13    12  nonce = 4 zero bytes || segment_id
//    25     8  ciphertext_len
//    33     n  ciphertext = AES-256-GCM(algo_id u8 || payload)
//  33+n    16  auth tag
// AAD is bytes [0, 13). algo_id 0 stores the canonical segment as is;
// algo_id 1 stores raw_len u64 followed by its zlib stream.
inline constexpr std::uint8_t kFrameMagic[4] = {'R', 'S', 'S', 'D'};
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 33;
inline constexpr std::size_t kFrameOverhead = kFrameHeaderSize + kAeadTagSize;

enum class Compression : std::uint8_t { None = 0, Zlib = 1 };

AeadNonce frame_nonce(std::uint64_t segment_id);

/// Deterministic for a given (segment, key, compression). Falls back to
/// algo_id 0 when compression does not shrink the payload.
Bytes encode_frame(const OffloadSegment& segment, const DeviceKey& key,
                   Compression compression = Compression::Zlib);

/// Throws Error(AuthenticationFailed) when the tag does not verify (wrong
/// key, flipped bit) and Error(MalformedFrame) for framing errors.
OffloadSegment decode_frame(ByteView frame, const DeviceKey& key);

/// Segment id from an unauthenticated frame header; throws MalformedFrame.
std::uint64_t peek_segment_id(ByteView frame);

}  // namespace rssd::offload
