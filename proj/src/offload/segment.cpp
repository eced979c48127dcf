#include "rssd/offload/segment.hpp"

#include <algorithm>
#include <cstring>

#include "rssd/common/codec.hpp"
#include "rssd/common/compress.hpp"
#include "rssd/common/error.hpp"

namespace rssd::offload {

Seq OffloadSegment::first_seq() const {
  for (const auto& s : log_segments) {
    if (!s.entries.empty()) return s.first_seq;
  }
  return 0;
}

Seq OffloadSegment::last_seq() const {
  for (auto it = log_segments.rbegin(); it != log_segments.rend(); ++it) {
    if (!it->entries.empty()) return it->last_seq;
  }
  return 0;
}

Bytes encode_segment(const OffloadSegment& segment) {
  Bytes out;
  std::size_t size = 1 + 8 + 32 + 4 + 4 + 4;
  for (const auto& s : segment.log_segments) {
    size += oplog::LogSegment::kHeaderSize + s.entries.size() * oplog::kEntryWireSize;
  }
  size += segment.page_records.size() * (24 + segment.page_size);
  out.reserve(size);
  ByteWriter w(out);
  w.u8(kSegmentFormatVersion);
  w.u64(segment.segment_id);
  w.digest(segment.prev_tail_hash);
  w.u32(segment.page_size);
  w.u32(static_cast<std::uint32_t>(segment.log_segments.size()));
  for (const auto& s : segment.log_segments) s.encode_to(out);
  w.u32(static_cast<std::uint32_t>(segment.page_records.size()));
  for (const auto& r : segment.page_records) {
    w.u64(r.write_seq);
    w.u64(r.lpa);
    w.u64(r.timestamp);
    w.raw(r.data);
  }
  return out;
}

OffloadSegment decode_segment(ByteView bytes) {
  ByteReader r(bytes);
  if (r.u8() != kSegmentFormatVersion) throw Error(Errc::MalformedFrame, "unknown segment version");
  OffloadSegment s;
  s.segment_id = r.u64();
  s.prev_tail_hash = r.digest();
  s.page_size = r.u32();
  auto log_count = r.u32();
  if (std::uint64_t{log_count} * oplog::LogSegment::kHeaderSize > r.remaining()) {
    throw Error(Errc::MalformedFrame, "log segment count exceeds input");
  }
  s.log_segments.reserve(log_count);
  for (std::uint32_t i = 0; i < log_count; ++i) s.log_segments.push_back(oplog::LogSegment::decode(r));
  auto record_count = r.u32();
  if (s.page_size == 0 && record_count > 0) throw Error(Errc::MalformedFrame, "zero page size");
  if (std::uint64_t{record_count} * (24 + std::uint64_t{s.page_size}) != r.remaining()) {
    throw Error(Errc::MalformedFrame, "page record section has the wrong length");
  }
  s.page_records.reserve(record_count);
  for (std::uint32_t i = 0; i < record_count; ++i) {
    PageRecord rec;
    rec.write_seq = r.u64();
    rec.lpa = r.u64();
    rec.timestamp = r.u64();
    auto data = r.raw(s.page_size);
    rec.data.assign(data.begin(), data.end());
    s.page_records.push_back(std::move(rec));
  }
  return s;
}

std::string check_segment_shape(const OffloadSegment& segment) {
  for (std::size_t i = 0; i < segment.page_records.size(); ++i) {
    const auto& r = segment.page_records[i];
    if (r.data.size() != segment.page_size) return "record " + std::to_string(i) + " has the wrong size";
    if (i > 0 && r.write_seq <= segment.page_records[i - 1].write_seq) {
      return "page records not strictly ascending at seq " + std::to_string(r.write_seq);
    }
  }
  for (std::size_t i = 1; i < segment.log_segments.size(); ++i) {
    if (segment.log_segments[i].first_seq != segment.log_segments[i - 1].last_seq + 1) {
      return "log segments are not contiguous";
    }
  }
  return {};
}

Digest bundle_digest(std::uint64_t segment_id, const std::vector<PageRecord>& records) {
  Sha256 h;
  std::uint8_t buf[24];
  store_be64(buf, segment_id);
  h.update(ByteView(buf, 8));
  for (const auto& r : records) {
    store_be64(buf, r.write_seq);
    store_be64(buf + 8, r.lpa);
    store_be64(buf + 16, r.timestamp);
    h.update(ByteView(buf, 24));
    h.update(sha256(r.data));
  }
  return h.finish();
}

AeadNonce frame_nonce(std::uint64_t segment_id) {
  AeadNonce n{};
  store_be64(n.data() + 4, segment_id);
  return n;
}

Bytes encode_frame(const OffloadSegment& segment, const DeviceKey& key, Compression compression) {
  Bytes canonical = encode_segment(segment);
  Bytes plain;
  if (compression == Compression::Zlib) {
    Bytes packed = deflate_bytes(canonical);
    if (packed.size() + 8 < canonical.size()) {
      plain.reserve(1 + 8 + packed.size());
      ByteWriter w(plain);
      w.u8(static_cast<std::uint8_t>(Compression::Zlib));
      w.u64(canonical.size());
      w.raw(packed);
    }
  }
  if (plain.empty()) {
    plain.reserve(1 + canonical.size());
    plain.push_back(static_cast<std::uint8_t>(Compression::None));
    plain.insert(plain.end(), canonical.begin(), canonical.end());
  }

  Bytes frame;
  frame.reserve(kFrameOverhead + plain.size());
  ByteWriter w(frame);
  w.raw(ByteView(kFrameMagic, 4));
  w.u8(kFrameVersion);
  w.u64(segment.segment_id);
  auto nonce = frame_nonce(segment.segment_id);
  AeadTag tag{};
  Bytes cipher = aead_seal(key, nonce, ByteView(frame.data(), 13), plain, tag);
  w.raw(nonce);
  w.u64(cipher.size());
  w.raw(cipher);
  w.raw(tag);
  return frame;
}

std::uint64_t peek_segment_id(ByteView frame) {
  if (frame.size() < kFrameOverhead || std::memcmp(frame.data(), kFrameMagic, 4) != 0) {
    throw Error(Errc::MalformedFrame, "not a segment frame");
  }
  return load_be64(frame.data() + 5);
}

OffloadSegment decode_frame(ByteView frame, const DeviceKey& key) {
  auto segment_id = peek_segment_id(frame);
  if (frame[4] != kFrameVersion) throw Error(Errc::MalformedFrame, "unknown frame version");
  auto nonce = frame_nonce(segment_id);
  if (!std::equal(nonce.begin(), nonce.end(), frame.begin() + 13)) {
    throw Error(Errc::MalformedFrame, "nonce does not match segment id");
  }
  auto cipher_len = load_be64(frame.data() + 25);
  if (cipher_len != frame.size() - kFrameOverhead) {
    throw Error(Errc::MalformedFrame, "ciphertext length mismatch");
  }
  AeadTag tag;
  std::copy(frame.end() - kAeadTagSize, frame.end(), tag.begin());
  auto plain = aead_open(key, nonce, frame.first(13), frame.subspan(kFrameHeaderSize, cipher_len), tag);
  if (!plain) throw Error(Errc::AuthenticationFailed, "frame tag does not verify", segment_id);
  if (plain->empty()) throw Error(Errc::MalformedFrame, "empty frame payload");

  OffloadSegment segment;
  ByteView body = ByteView(*plain).subspan(1);
  switch ((*plain)[0]) {
    case static_cast<std::uint8_t>(Compression::None):
      segment = decode_segment(body);
      break;
    case static_cast<std::uint8_t>(Compression::Zlib): {
      ByteReader r(body);
      auto raw_len = r.u64();
      if (raw_len > (std::uint64_t{1} << 32)) throw Error(Errc::MalformedFrame, "declared size too large");
      Bytes canonical = inflate_bytes(body.subspan(8), raw_len);
      segment = decode_segment(canonical);
      break;
    }
    default:
      throw Error(Errc::MalformedFrame, "unknown compression id");
  }
  if (segment.segment_id != segment_id) {
    throw Error(Errc::MalformedFrame, "segment id differs from frame header");
  }
  return segment;
}

}  // namespace rssd::offload
