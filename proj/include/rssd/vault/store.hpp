#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <unordered_map>

#include "rssd/common/crypto.hpp"
#include "rssd/offload/protocol.hpp"
#include "rssd/offload/segment.hpp"
#include "rssd/vault/detectors.hpp"
#include "rssd/vault/query.hpp"

namespace rssd::vault {

struct VaultOptions {
  std::filesystem::path directory;
  DeviceKey key;
  /// fsync each segment file and the directory before acknowledging.
  bool fsync = true;
};

// Segment file layout: magic "RSVF" | version u8 | canonical OffloadSegment.
// Files are named segment_<id, 20 digits>.rsvf and written via a .tmp file
// that is renamed into place.
inline constexpr std::uint8_t kFileMagic[4] = {'R', 'S', 'V', 'F'};
inline constexpr std::uint8_t kFileVersion = 1;
inline constexpr std::size_t kFileHeaderSize = 5;

std::filesystem::path segment_file_name(std::uint64_t segment_id);

/// File-backed remote vault: one immutable file per ingested segment plus
/// an in-memory index rebuilt from the files on open.
///
/// Ingest is serialized; queries may run concurrently with each other and
/// with ingest, and only observe fully ingested segments.
class VaultStore : public VaultQuery {
 public:
  explicit VaultStore(VaultOptions options);

  /// Decrypt, verify continuity and digests, persist, index, then Ack.
  /// All-or-nothing: a Nack leaves the store unchanged.
  offload::Reply ingest(ByteView frame);

  VaultStatus status() override;
  std::vector<VersionRecord> query_versions(Lpa lpa, SimTime lo, SimTime hi) override;
  std::vector<VaultEvent> history(Lpa lpa) override;
  FetchedPage fetch_page(std::uint64_t segment_id, std::uint32_t record_index) override;
  DetectionReport run_detector(const std::string& name, Seq lo, Seq hi) override;
  LogAudit audit_log(Seq lo, Seq hi) override;

  void register_detector(const std::string& name, DetectionHook hook);
  std::vector<std::string> detector_names() const;

  const std::filesystem::path& directory() const { return options_.directory; }
  std::vector<std::uint64_t> segment_ids() const;
  std::filesystem::path segment_path(std::uint64_t segment_id) const;

 private:
  struct FileInfo {
    Seq first_seq = 0;
    Seq last_seq = 0;
    std::uint32_t page_size = 0;
    std::uint32_t record_count = 0;
    std::uint64_t records_offset = 0;  // file offset of the first page record
    std::uint64_t size = 0;
    Digest content_hash{};  // SHA-256 of the canonical segment
  };

  struct PendingWrite {
    Lpa lpa = 0;
    SimTime timestamp = 0;
    Digest digest{};
  };

  /// Continuity, ordering and digest checks against the current state.
  /// Returns the Nack to send, or nullopt when the segment is acceptable.
  std::optional<offload::Reply> validate(const offload::OffloadSegment& segment) const;
  void apply(const offload::OffloadSegment& segment, const FileInfo& info);
  void persist(std::uint64_t segment_id, ByteView file_bytes);
  void rebuild();

  VaultOptions options_;
  std::mutex ingest_mutex_;
  mutable std::shared_mutex mutex_;

  std::map<std::uint64_t, FileInfo> files_;
  std::uint64_t last_segment_id_ = 0;
  Seq last_seq_ = 0;
  Digest last_tail_{};
  std::uint64_t last_log_id_ = 0;
  std::uint32_t page_size_ = 0;
  std::uint64_t stored_bytes_ = 0;
  std::uint64_t page_records_ = 0;
  std::uint64_t damaged_segment_ = 0;

  std::unordered_map<Lpa, std::vector<VaultEvent>> index_;
  std::unordered_map<Seq, PendingWrite> pending_;
  std::set<Lpa> mapped_;

  std::map<std::string, DetectionHook> detectors_;
};

}  // namespace rssd::vault
