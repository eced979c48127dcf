#include "rssd/vault/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>

#include "rssd/common/codec.hpp"
#include "rssd/common/error.hpp"

namespace rssd::vault {

namespace fs = std::filesystem;
using offload::NackReason;
using offload::OffloadSegment;
using offload::Reply;
using oplog::EntryKind;
using oplog::LogEntry;

fs::path segment_file_name(std::uint64_t segment_id) {
  char name[64];
  std::snprintf(name, sizeof(name), "segment_%020llu.rsvf", static_cast<unsigned long long>(segment_id));
  return name;
}

namespace {

struct WriteInfo {
  Lpa lpa = 0;
  SimTime timestamp = 0;
  Digest digest{};
};

using WriteLookup = std::function<std::optional<WriteInfo>(Seq)>;

struct RecordIssue {
  Seq seq = 0;
  bool data_only = false;  // header fields match the log, page bytes do not
};

/// Checks every page record against the Write entry it claims, and the
/// segment's closing OffloadSealed entry against the bundle digest.
std::optional<RecordIssue> check_records(const OffloadSegment& segment, const WriteLookup& lookup) {
  Seq prev = 0;
  for (const auto& r : segment.page_records) {
    if (r.write_seq <= prev) return RecordIssue{r.write_seq, false};
    prev = r.write_seq;
    auto w = lookup(r.write_seq);
    if (!w || w->lpa != r.lpa || w->timestamp != r.timestamp) return RecordIssue{r.write_seq, false};
    if (sha256(r.data) != w->digest) return RecordIssue{r.write_seq, true};
  }
  const LogEntry* closing = nullptr;
  if (!segment.log_segments.empty() && !segment.log_segments.back().entries.empty()) {
    closing = &segment.log_segments.back().entries.back();
  }
  if (!closing || closing->kind != EntryKind::OffloadSealed || !closing->payload_digest ||
      *closing->payload_digest != offload::bundle_digest(segment.segment_id, segment.page_records)) {
    return RecordIssue{segment.first_seq(), false};
  }
  return std::nullopt;
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::StorageFailure, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  Bytes out(size);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(Errc::StorageFailure, "short read on " + path.string());
  return out;
}

void fsync_path(const fs::path& path, bool directory) {
  int fd = ::open(path.c_str(), (directory ? O_RDONLY | O_DIRECTORY : O_RDONLY) | O_CLOEXEC);
  if (fd < 0) throw Error(Errc::StorageFailure, "open for fsync failed: " + path.string());
  int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw Error(Errc::StorageFailure, "fsync failed: " + path.string());
}

/// What the next stored file must continue from.
struct ChainState {
  Digest head{};
  Seq next = 1;
  std::uint64_t log_id = 0;    // last log segment id stored
  std::uint32_t page_size = 0;  // 0 until the first file fixes it
};

bool valid_page_size(std::uint32_t size, std::uint32_t expected) {
  return size >= 16 && (size & (size - 1)) == 0 && (expected == 0 || size == expected);
}

/// Result of walking one stored file without trusting any of its fields.
struct FileWalk {
  std::optional<Seq> tamper_at;
  OffloadSegment segment;  // valid only when tamper_at is empty
  Seq last_seq = 0;
  Digest tail{};
};

/// Verifies a stored file given the chain state expected before it. The
/// attribution rule: a damaged log entry is reported at its own seq, a
/// log segment header that disagrees with its entries at that segment's
/// first seq, damaged page bytes under an intact record header at the
/// record's write seq, and any other damage at the first seq the file
/// should hold.
FileWalk walk_file(ByteView bytes, std::uint64_t expected_id, const ChainState& state, const WriteLookup& lookup) {
  const Digest& expected_head = state.head;
  Seq expected_first = state.next;
  FileWalk out;
  auto tampered = [&](Seq seq) {
    out.tamper_at = seq;
    return out;
  };

  struct RawLog {
    std::uint64_t id, first, last;
    Digest head, tail;
    ByteView raw;
  };
  std::vector<RawLog> logs;
  std::uint32_t page_size = 0;
  std::size_t records_at = 0;
  std::uint32_t record_count = 0;
  try {
    ByteReader r(bytes);
    auto magic = r.raw(4);
    if (std::memcmp(magic.data(), kFileMagic, 4) != 0 || r.u8() != kFileVersion) {
      return tampered(expected_first);
    }
    if (r.u8() != offload::kSegmentFormatVersion || r.u64() != expected_id ||
        r.digest() != expected_head) {
      return tampered(expected_first);
    }
    page_size = r.u32();
    if (!valid_page_size(page_size, state.page_size)) return tampered(expected_first);
    auto log_count = r.u32();
    if (log_count == 0 || std::uint64_t{log_count} * oplog::LogSegment::kHeaderSize > r.remaining()) {
      return tampered(expected_first);
    }
    for (std::uint32_t i = 0; i < log_count; ++i) {
      RawLog l;
      l.id = r.u64();
      l.first = r.u64();
      l.last = r.u64();
      l.head = r.digest();
      l.tail = r.digest();
      auto count = r.u32();
      if (count == 0 || std::uint64_t{count} * oplog::kEntryWireSize > r.remaining()) {
        return tampered(expected_first);
      }
      l.raw = r.raw(std::size_t{count} * oplog::kEntryWireSize);
      logs.push_back(l);
    }
    record_count = r.u32();
    records_at = r.position();
    if (std::uint64_t{record_count} * (24 + std::uint64_t{page_size}) != r.remaining() ||
        (record_count > 0 && page_size == 0)) {
      return tampered(expected_first);
    }
  } catch (const Error&) {
    return tampered(expected_first);
  }

  // Chain first: entry bytes are attributed exactly.
  Digest head = expected_head;
  Seq next = expected_first;
  for (const auto& l : logs) {
    Digest tail{};
    auto check = oplog::verify_raw_entries(l.raw, head, next, &tail);
    if (!check.ok()) return tampered(*check.tamper_at);
    head = tail;
    next += l.raw.size() / oplog::kEntryWireSize;
  }

  // Log segment headers must agree with the verified entries.
  head = expected_head;
  next = expected_first;
  for (const auto& l : logs) {
    std::size_t count = l.raw.size() / oplog::kEntryWireSize;
    oplog::LogSegment seg;
    seg.segment_id = l.id;
    seg.first_seq = l.first;
    seg.last_seq = l.last;
    seg.head_hash = l.head;
    seg.tail_hash = l.tail;
    seg.sealed = true;
    for (std::size_t i = 0; i < count; ++i) {
      seg.entries.push_back(*oplog::decode_entry(l.raw.subspan(i * oplog::kEntryWireSize, oplog::kEntryWireSize)));
    }
    if (l.first != next || l.last != next + count - 1 || l.head != head ||
        l.tail != seg.entries.back().chain_hash || l.id != state.log_id + out.segment.log_segments.size() + 1) {
      return tampered(next);
    }
    head = l.tail;
    next += count;
    out.segment.log_segments.push_back(std::move(seg));
  }

  out.segment.segment_id = expected_id;
  out.segment.prev_tail_hash = expected_head;
  out.segment.page_size = page_size;
  ByteReader rr(bytes.subspan(records_at));
  for (std::uint32_t i = 0; i < record_count; ++i) {
    offload::PageRecord rec;
    rec.write_seq = rr.u64();
    rec.lpa = rr.u64();
    rec.timestamp = rr.u64();
    auto data = rr.raw(page_size);
    rec.data.assign(data.begin(), data.end());
    out.segment.page_records.push_back(std::move(rec));
  }

  // Writes logged in this file are visible to its own records.
  std::unordered_map<Seq, WriteInfo> local;
  for (const auto& l : out.segment.log_segments) {
    for (const auto& e : l.entries) {
      if (e.kind == EntryKind::Write && e.lpa_range && e.payload_digest) {
        local[e.seq] = WriteInfo{e.lpa_range->start, e.timestamp, *e.payload_digest};
      }
    }
  }
  auto issue = check_records(out.segment, [&](Seq seq) -> std::optional<WriteInfo> {
    if (auto it = local.find(seq); it != local.end()) return it->second;
    return lookup(seq);
  });
  if (issue) return tampered(issue->data_only ? issue->seq : expected_first);

  out.last_seq = next - 1;
  out.tail = head;
  return out;
}

ChainState advance(const FileWalk& walk) {
  return ChainState{walk.tail, walk.last_seq + 1, walk.segment.log_segments.back().segment_id,
                    walk.segment.page_size};
}

/// Tracks Writes whose page has not been seen in a record yet.
struct PendingTracker {
  std::unordered_map<Seq, WriteInfo> pending;

  WriteLookup lookup() const {
    return [this](Seq seq) -> std::optional<WriteInfo> {
      auto it = pending.find(seq);
      if (it == pending.end()) return std::nullopt;
      return it->second;
    };
  }
  void apply(const OffloadSegment& segment) {
    for (const auto& l : segment.log_segments) {
      for (const auto& e : l.entries) {
        if (e.kind == EntryKind::Write && e.lpa_range && e.payload_digest) {
          pending[e.seq] = WriteInfo{e.lpa_range->start, e.timestamp, *e.payload_digest};
        }
      }
    }
    for (const auto& r : segment.page_records) pending.erase(r.write_seq);
  }
};

}  // namespace

VaultStore::VaultStore(VaultOptions options) : options_(std::move(options)) {
  std::error_code ec;
  fs::create_directories(options_.directory, ec);
  if (ec || !fs::is_directory(options_.directory)) {
    throw Error(Errc::StorageFailure, "cannot create vault directory " + options_.directory.string());
  }
  detectors_ = builtin_detectors();
  rebuild();
}

fs::path VaultStore::segment_path(std::uint64_t segment_id) const {
  return options_.directory / segment_file_name(segment_id);
}

std::vector<std::uint64_t> VaultStore::segment_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::uint64_t> ids;
  for (const auto& [id, info] : files_) ids.push_back(id);
  return ids;
}

void VaultStore::rebuild() {
  std::vector<std::uint64_t> ids;
  for (const auto& entry : fs::directory_iterator(options_.directory)) {
    auto name = entry.path().filename().string();
    if (entry.path().extension() == ".tmp") {
      fs::remove(entry.path());
      continue;
    }
    unsigned long long id = 0;
    char tail[8] = {};
    if (std::sscanf(name.c_str(), "segment_%20llu.%4s", &id, tail) == 2 && std::string(tail) == "rsvf" &&
        name == segment_file_name(id).string()) {
      ids.push_back(id);
    }
  }
  std::sort(ids.begin(), ids.end());

  PendingTracker tracker;
  for (auto id : ids) {
    if (id != last_segment_id_ + 1) {
      damaged_segment_ = id;
      break;
    }
    Bytes bytes = read_file(segment_path(id));
    auto walk = walk_file(bytes, id, ChainState{last_tail_, last_seq_ + 1, last_log_id_, page_size_},
                          tracker.lookup());
    if (walk.tamper_at) {
      damaged_segment_ = id;
      break;
    }
    FileInfo info;
    info.first_seq = walk.segment.first_seq();
    info.last_seq = walk.last_seq;
    info.page_size = walk.segment.page_size;
    info.record_count = static_cast<std::uint32_t>(walk.segment.page_records.size());
    info.size = bytes.size();
    info.records_offset = bytes.size() - info.record_count * (24 + std::uint64_t{info.page_size});
    info.content_hash = sha256(ByteView(bytes).subspan(kFileHeaderSize));
    tracker.apply(walk.segment);
    apply(walk.segment, info);
  }
}

std::optional<Reply> VaultStore::validate(const OffloadSegment& segment) const {
  if (!offload::check_segment_shape(segment).empty() || segment.log_segments.empty()) {
    return Reply::nack(NackReason::Malformed, segment.segment_id);
  }
  Seq first = segment.log_segments.front().first_seq;
  if (segment.prev_tail_hash != last_tail_ || first != last_seq_ + 1) {
    return Reply::nack(NackReason::ChainMismatch, first);
  }
  if (!valid_page_size(segment.page_size, page_size_)) return Reply::nack(NackReason::Malformed, segment.segment_id);
  Digest head = last_tail_;
  std::uint64_t log_id = last_log_id_;
  for (const auto& l : segment.log_segments) {
    if (l.entries.empty()) return Reply::nack(NackReason::Malformed, segment.segment_id);
    if (l.segment_id != ++log_id) return Reply::nack(NackReason::ChainMismatch, l.first_seq);
    auto check = oplog::verify_segment(l, head);
    if (!check.ok()) return Reply::nack(NackReason::ChainMismatch, *check.tamper_at);
    head = l.tail_hash;
  }
  std::unordered_map<Seq, WriteInfo> local;
  for (const auto& l : segment.log_segments) {
    for (const auto& e : l.entries) {
      if (e.kind == EntryKind::Write && e.lpa_range && e.payload_digest) {
        local[e.seq] = WriteInfo{e.lpa_range->start, e.timestamp, *e.payload_digest};
      }
    }
  }
  auto issue = check_records(segment, [&](Seq seq) -> std::optional<WriteInfo> {
    if (auto it = local.find(seq); it != local.end()) return it->second;
    if (auto it = pending_.find(seq); it != pending_.end()) {
      return WriteInfo{it->second.lpa, it->second.timestamp, it->second.digest};
    }
    return std::nullopt;
  });
  if (issue) return Reply::nack(NackReason::DigestMismatch, issue->seq);
  return std::nullopt;
}

void VaultStore::apply(const OffloadSegment& segment, const FileInfo& info) {
  std::unique_lock lock(mutex_);
  for (const auto& l : segment.log_segments) {
    for (const auto& e : l.entries) {
      if (!e.lpa_range) continue;
      if (e.kind == EntryKind::Write && e.payload_digest) {
        Lpa lpa = e.lpa_range->start;
        pending_[e.seq] = PendingWrite{lpa, e.timestamp, *e.payload_digest};
        index_[lpa].push_back(VaultEvent{e.seq, e.timestamp, EventKind::Write, *e.payload_digest, 0, 0});
        mapped_.insert(lpa);
      } else if (e.kind == EntryKind::Trim) {
        auto first = mapped_.lower_bound(e.lpa_range->start);
        auto last = mapped_.lower_bound(e.lpa_range->start + e.lpa_range->length);
        for (auto it = first; it != last; ++it) {
          index_[*it].push_back(VaultEvent{e.seq, e.timestamp, EventKind::Trim, Digest{}, 0, 0});
        }
        mapped_.erase(first, last);
      }
    }
  }
  for (std::uint32_t i = 0; i < segment.page_records.size(); ++i) {
    const auto& r = segment.page_records[i];
    auto& events = index_[r.lpa];
    auto it = std::lower_bound(events.begin(), events.end(), r.write_seq,
                               [](const VaultEvent& ev, Seq seq) { return ev.seq < seq; });
    if (it == events.end() || it->seq != r.write_seq) {
      throw Error(Errc::Internal, "indexed record without its write event", r.write_seq);
    }
    it->segment_id = segment.segment_id;
    it->record_index = i;
    pending_.erase(r.write_seq);
  }
  files_[segment.segment_id] = info;
  last_segment_id_ = segment.segment_id;
  last_seq_ = info.last_seq;
  last_tail_ = segment.log_segments.back().tail_hash;
  last_log_id_ = segment.log_segments.back().segment_id;
  page_size_ = segment.page_size;
  stored_bytes_ += info.size;
  page_records_ += info.record_count;
}

void VaultStore::persist(std::uint64_t segment_id, ByteView file_bytes) {
  auto final_path = segment_path(segment_id);
  auto tmp_path = final_path;
  tmp_path += ".tmp";
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(file_bytes.data()),
              static_cast<std::streamsize>(file_bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp_path, ec);
      throw Error(Errc::StorageFailure, "write failed: " + tmp_path.string());
    }
  }
  if (options_.fsync) fsync_path(tmp_path, false);
  std::error_code ec;
  fs::rename(tmp_path, final_path, ec);
  if (ec) throw Error(Errc::StorageFailure, "rename failed: " + ec.message());
  if (options_.fsync) fsync_path(options_.directory, true);
}

Reply VaultStore::ingest(ByteView frame) {
  std::lock_guard ingest_lock(ingest_mutex_);
  OffloadSegment segment;
  try {
    segment = offload::decode_frame(frame, options_.key);
  } catch (const Error& e) {
    if (e.code() == Errc::AuthenticationFailed) return Reply::nack(NackReason::AuthFailed);
    return Reply::nack(NackReason::Malformed);
  }
  Bytes canonical = offload::encode_segment(segment);
  Digest content = sha256(canonical);

  if (damaged_segment_ != 0) return Reply::nack(NackReason::StorageFailure, damaged_segment_);
  if (segment.segment_id <= last_segment_id_) {
    auto it = files_.find(segment.segment_id);
    if (it != files_.end() && it->second.content_hash == content) return Reply::ack(segment.segment_id);
    return Reply::nack(NackReason::Conflict, segment.segment_id);
  }
  if (segment.segment_id != last_segment_id_ + 1) {
    return Reply::nack(NackReason::OutOfOrder, last_segment_id_ + 1);
  }
  if (auto nack = validate(segment)) return *nack;

  Bytes file;
  file.reserve(kFileHeaderSize + canonical.size());
  file.insert(file.end(), kFileMagic, kFileMagic + 4);
  file.push_back(kFileVersion);
  file.insert(file.end(), canonical.begin(), canonical.end());
  try {
    persist(segment.segment_id, file);
  } catch (const Error&) {
    return Reply::nack(NackReason::StorageFailure, segment.segment_id);
  }

  FileInfo info;
  info.first_seq = segment.first_seq();
  info.last_seq = segment.last_seq();
  info.page_size = segment.page_size;
  info.record_count = static_cast<std::uint32_t>(segment.page_records.size());
  info.size = file.size();
  info.records_offset = file.size() - info.record_count * (24 + std::uint64_t{info.page_size});
  info.content_hash = content;
  apply(segment, info);
  return Reply::ack(segment.segment_id);
}

VaultStatus VaultStore::status() {
  std::shared_lock lock(mutex_);
  VaultStatus s;
  s.last_segment_id = last_segment_id_;
  s.last_seq = last_seq_;
  s.last_tail_hash = last_tail_;
  s.segments = files_.size();
  s.stored_bytes = stored_bytes_;
  s.page_records = page_records_;
  s.damaged_segment = damaged_segment_;
  return s;
}

std::vector<VersionRecord> VaultStore::query_versions(Lpa lpa, SimTime lo, SimTime hi) {
  std::shared_lock lock(mutex_);
  std::vector<VersionRecord> out;
  auto it = index_.find(lpa);
  if (it == index_.end()) return out;
  for (const auto& ev : it->second) {
    if (ev.kind == EventKind::Write && ev.offloaded() && ev.timestamp >= lo && ev.timestamp <= hi) {
      out.push_back(VersionRecord{ev.seq, ev.timestamp, ev.segment_id, ev.record_index});
    }
  }
  return out;
}

std::vector<VaultEvent> VaultStore::history(Lpa lpa) {
  std::shared_lock lock(mutex_);
  auto it = index_.find(lpa);
  if (it == index_.end()) return {};
  return it->second;
}

FetchedPage VaultStore::fetch_page(std::uint64_t segment_id, std::uint32_t record_index) {
  FileInfo info;
  {
    std::shared_lock lock(mutex_);
    auto it = files_.find(segment_id);
    if (it == files_.end()) {
      throw Error(Errc::UnknownSegment, "segment " + std::to_string(segment_id) + " not in vault", segment_id);
    }
    info = it->second;
  }
  if (record_index >= info.record_count) {
    throw Error(Errc::BadIndex, "record " + std::to_string(record_index) + " of segment " +
                                    std::to_string(segment_id), record_index);
  }
  std::ifstream in(segment_path(segment_id), std::ios::binary);
  std::uint64_t record_size = 24 + std::uint64_t{info.page_size};
  in.seekg(static_cast<std::streamoff>(info.records_offset + record_index * record_size));
  Bytes raw(record_size);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw Error(Errc::StorageFailure, "cannot read segment " + std::to_string(segment_id));

  FetchedPage page;
  page.write_seq = load_be64(raw.data());
  page.lpa = load_be64(raw.data() + 8);
  page.data.assign(raw.begin() + 24, raw.end());

  // The stored bytes must still match the indexed Write entry.
  std::shared_lock lock(mutex_);
  auto idx = index_.find(page.lpa);
  const VaultEvent* ev = nullptr;
  if (idx != index_.end()) {
    auto it = std::lower_bound(idx->second.begin(), idx->second.end(), page.write_seq,
                               [](const VaultEvent& e, Seq seq) { return e.seq < seq; });
    if (it != idx->second.end() && it->seq == page.write_seq) ev = &*it;
  }
  if (!ev || ev->segment_id != segment_id || ev->record_index != record_index ||
      sha256(page.data) != ev->digest) {
    throw Error(Errc::TamperDetected,
                "stored page of segment " + std::to_string(segment_id) + " does not match the log",
                ev ? ev->seq : info.first_seq);
  }
  return page;
}

LogAudit VaultStore::audit_log(Seq lo, Seq hi) {
  std::vector<std::uint64_t> ids;
  std::uint64_t damaged;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, info] : files_) ids.push_back(id);
    damaged = damaged_segment_;
  }
  if (damaged != 0) ids.push_back(damaged);

  LogAudit audit;
  PendingTracker tracker;
  ChainState state;
  std::uint64_t expected_id = 1;
  for (auto id : ids) {
    if (id != expected_id) {
      audit.tamper_at = state.next;
      break;
    }
    Bytes bytes;
    try {
      bytes = read_file(segment_path(id));
    } catch (const Error&) {
      audit.tamper_at = state.next;
      break;
    }
    auto walk = walk_file(bytes, id, state, tracker.lookup());
    if (walk.tamper_at) {
      audit.tamper_at = walk.tamper_at;
      break;
    }
    tracker.apply(walk.segment);
    Digest prev = state.head;
    for (const auto& l : walk.segment.log_segments) {
      for (const auto& e : l.entries) {
        if (e.seq >= lo && e.seq <= hi) {
          if (audit.entries.empty()) audit.head_hash = prev;
          audit.entries.push_back(e);
        }
        prev = e.chain_hash;
      }
    }
    state = advance(walk);
    ++expected_id;
  }
  audit.last_seq = state.next - 1;
  audit.tail_hash = state.head;
  return audit;
}

DetectionReport VaultStore::run_detector(const std::string& name, Seq lo, Seq hi) {
  DetectionHook hook;
  {
    std::shared_lock lock(mutex_);
    auto it = detectors_.find(name);
    if (it == detectors_.end()) throw Error(Errc::UnknownDetector, "no detector named '" + name + "'");
    hook = it->second;
  }
  auto audit = audit_log(1, hi);
  DetectorInput input{audit.entries, lo, hi};
  auto report = hook(input);
  report.detector = name;
  return report;
}

void VaultStore::register_detector(const std::string& name, DetectionHook hook) {
  std::unique_lock lock(mutex_);
  detectors_[name] = std::move(hook);
}

std::vector<std::string> VaultStore::detector_names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> names;
  for (const auto& [name, hook] : detectors_) names.push_back(name);
  return names;
}

}  // namespace rssd::vault
