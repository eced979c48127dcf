#include "rssd/oplog/op_log.hpp"

#include <algorithm>

#include "rssd/common/error.hpp"

namespace rssd::oplog {

void LogSegment::encode_to(Bytes& out) const {
  ByteWriter w(out);
  w.u64(segment_id);
  w.u64(first_seq);
  w.u64(last_seq);
  w.digest(head_hash);
  w.digest(tail_hash);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) w.raw(encode_entry(e));
}

Bytes LogSegment::encode() const {
  Bytes out;
  out.reserve(kHeaderSize + entries.size() * kEntryWireSize);
  encode_to(out);
  return out;
}

LogSegment LogSegment::decode(ByteReader& r) {
  LogSegment s;
  s.segment_id = r.u64();
  s.first_seq = r.u64();
  s.last_seq = r.u64();
  s.head_hash = r.digest();
  s.tail_hash = r.digest();
  auto count = r.u32();
  if (std::uint64_t{count} * kEntryWireSize > r.remaining()) {
    throw Error(Errc::MalformedFrame, "log segment entry count exceeds input");
  }
  s.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto e = decode_entry(r.raw(kEntryWireSize));
    if (!e) throw Error(Errc::MalformedFrame, "non-canonical log entry", s.first_seq + i);
    s.entries.push_back(*e);
  }
  s.sealed = true;
  return s;
}

ChainCheck verify_raw_entries(ByteView raw, const Digest& expected_head, Seq expected_first_seq,
                              Digest* tail_out) {
  Digest prev = expected_head;
  std::size_t count = raw.size() / kEntryWireSize;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* p = raw.data() + i * kEntryWireSize;
    Seq expected_seq = expected_first_seq + i;
    EntryBody body;
    std::copy(p, p + kEntryBodySize, body.begin());
    Digest stored;
    std::copy(p + kEntryBodySize, p + kEntryWireSize, stored.begin());
    if (load_be64(p + 1) != expected_seq || chain_next(prev, body) != stored ||
        !decode_entry(ByteView(p, kEntryWireSize))) {
      return ChainCheck::tampered(expected_seq);
    }
    prev = stored;
  }
  if (raw.size() % kEntryWireSize != 0) {
    return ChainCheck::tampered(expected_first_seq + count);
  }
  if (tail_out) *tail_out = prev;
  return ChainCheck::good();
}

ChainCheck verify_chain(std::span<const LogEntry> entries, const Digest& expected_head,
                        Seq expected_first_seq) {
  Digest prev = expected_head;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    Seq expected_seq = expected_first_seq + i;
    if (e.seq != expected_seq || chain_next(prev, encode_body(e)) != e.chain_hash) {
      return ChainCheck::tampered(expected_seq);
    }
    prev = e.chain_hash;
  }
  return ChainCheck::good();
}

ChainCheck verify_segment(const LogSegment& s, const Digest& expected_head) {
  auto check = verify_chain(s.entries, expected_head, s.first_seq);
  if (!check.ok()) return check;
  Digest tail = s.entries.empty() ? expected_head : s.entries.back().chain_hash;
  if (s.head_hash != expected_head || s.tail_hash != tail || s.entries.empty() ||
      s.last_seq != s.first_seq + s.entries.size() - 1) {
    return ChainCheck::tampered(s.first_seq);
  }
  return ChainCheck::good();
}

OpLog::OpLog(SealPolicy policy, bool enabled) : policy_(policy), enabled_(enabled) {}

LogEntry OpLog::append(EntryKind kind, std::optional<LpaRange> lpa_range,
                       std::optional<nand::PhysPageAddr> ppa, std::optional<Digest> payload_digest,
                       SimTime timestamp) {
  std::lock_guard lock(mutex_);
  LogEntry e;
  e.seq = next_seq_++;
  e.timestamp = timestamp;
  e.kind = kind;
  e.lpa_range = lpa_range;
  e.ppa = ppa;
  e.payload_digest = payload_digest;
  if (!enabled_) return e;

  e.chain_hash = chain_next(tail_, encode_body(e));
  if (open_.entries.empty()) {
    open_.first_seq = e.seq;
    open_.head_hash = tail_;
  }
  tail_ = e.chain_hash;
  open_.entries.push_back(e);
  bytes_logged_ += kEntryWireSize;

  if (open_.entries.size() >= policy_.max_entries ||
      timestamp - std::min(timestamp, open_.entries.front().timestamp) >= policy_.max_age) {
    seal_locked();
  }
  return e;
}

LogSegment OpLog::seal_locked() {
  if (open_.entries.empty()) throw Error(Errc::NothingToSeal, "no unsealed entries");
  open_.segment_id = next_segment_id_++;
  open_.last_seq = open_.entries.back().seq;
  open_.tail_hash = tail_;
  open_.sealed = true;
  sealed_.push_back(std::move(open_));
  open_ = LogSegment{};
  return sealed_.back();
}

LogSegment OpLog::seal_segment() {
  std::lock_guard lock(mutex_);
  return seal_locked();
}

Seq OpLog::last_seq() const {
  std::lock_guard lock(mutex_);
  return next_seq_ - 1;
}

Digest OpLog::tail_hash() const {
  std::lock_guard lock(mutex_);
  return tail_;
}

std::size_t OpLog::open_entries() const {
  std::lock_guard lock(mutex_);
  return open_.entries.size();
}

std::vector<LogSegment> OpLog::sealed_after(std::uint64_t after_id) const {
  std::lock_guard lock(mutex_);
  std::vector<LogSegment> out;
  for (const auto& s : sealed_) {
    if (s.segment_id > after_id) out.push_back(s);
  }
  return out;
}

std::uint64_t OpLog::last_sealed_id() const {
  std::lock_guard lock(mutex_);
  return next_segment_id_ - 1;
}

void OpLog::release_through(std::uint64_t segment_id) {
  std::lock_guard lock(mutex_);
  while (!sealed_.empty() && sealed_.front().segment_id <= segment_id) sealed_.pop_front();
}

OpLog::Resident OpLog::resident() const {
  std::lock_guard lock(mutex_);
  Resident r;
  if (!sealed_.empty()) {
    r.head_hash = sealed_.front().head_hash;
  } else {
    r.head_hash = open_.entries.empty() ? tail_ : open_.head_hash;
  }
  for (const auto& s : sealed_) r.entries.insert(r.entries.end(), s.entries.begin(), s.entries.end());
  r.entries.insert(r.entries.end(), open_.entries.begin(), open_.entries.end());
  return r;
}

std::uint64_t OpLog::bytes_logged() const {
  std::lock_guard lock(mutex_);
  return bytes_logged_;
}

}  // namespace rssd::oplog
