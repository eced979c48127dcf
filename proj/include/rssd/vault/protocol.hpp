#pragma once

#include <cstdint>

#include "rssd/common/types.hpp"

namespace rssd::vault {

// Every message on a vault connection is a u32 big-endian length followed
// by the payload. A payload starting with "RSSD" is a segment frame and is
// answered with an ingest reply (see offload/protocol.hpp). A payload
// starting with "RSQY" is a query:
//
//   "RSQY" | opcode u8 | arguments
//
//   opcode  arguments                         ok body
//   1 status     -                             last_segment_id u64, last_seq u64,
//                                              last_tail[32], segments u64,
//                                              stored_bytes u64, page_records u64,
//                                              damaged_segment u64
//   2 versions   lpa u64, lo u64, hi u64       n u32, n x (seq u64, ts u64,
//                                              segment_id u64, record_index u32)
//   3 history    lpa u64                       n u32, n x (seq u64, ts u64, kind u8,
//                                              digest[32], segment_id u64,
//                                              record_index u32)
//   4 fetch      segment_id u64, index u32     lpa u64, seq u64, len u32, bytes
//   5 detect     name str, lo u64, hi u64      suspicious u8, summary str,
//                                              n u32, n x seq u64
//   6 audit      lo u64, hi u64                tamper u8, tamper_seq u64,
//                                              head[32], last_seq u64, tail[32],
//                                              n u32, n x entry (115 bytes)
//
// Query replies start with a status byte: 2 = ok followed by the body, or
// 3 = error followed by errc u8, has_detail u8, detail u64, message str.
// str is a u32 length followed by bytes.
inline constexpr std::uint8_t kQueryMagic[4] = {'R', 'S', 'Q', 'Y'};
inline constexpr std::uint8_t kStatusQueryOk = 2;
inline constexpr std::uint8_t kStatusQueryError = 3;

enum class QueryOp : std::uint8_t {
  Status = 1,
  Versions = 2,
  History = 3,
  Fetch = 4,
  Detect = 5,
  Audit = 6,
};

}  // namespace rssd::vault
