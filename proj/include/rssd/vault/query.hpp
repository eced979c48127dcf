#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rssd/common/types.hpp"
#include "rssd/oplog/log_entry.hpp"

namespace rssd::vault {

struct VaultStatus {
  std::uint64_t last_segment_id = 0;
  Seq last_seq = 0;
  Digest last_tail_hash{};
  std::uint64_t segments = 0;
  std::uint64_t stored_bytes = 0;
  std::uint64_t page_records = 0;
  /// First damaged segment found while rebuilding the index, 0 if none.
  std::uint64_t damaged_segment = 0;
};

/// One offloaded version of an lpa.
struct VersionRecord {
  Seq write_seq = 0;
  SimTime timestamp = 0;
  std::uint64_t segment_id = 0;
  std::uint32_t record_index = 0;

  bool operator==(const VersionRecord&) const = default;
};

enum class EventKind : std::uint8_t { Write = 1, Trim = 2 };

/// A Write or Trim of one lpa as known from the vault's copy of the log.
/// Writes whose page was never offloaded have segment_id 0.
struct VaultEvent {
  Seq seq = 0;
  SimTime timestamp = 0;
  EventKind kind = EventKind::Write;
  Digest digest{};
  std::uint64_t segment_id = 0;
  std::uint32_t record_index = 0;

  bool offloaded() const { return segment_id != 0; }
  bool operator==(const VaultEvent&) const = default;
};

struct FetchedPage {
  Lpa lpa = 0;
  Seq write_seq = 0;
  Bytes data;
};

struct DetectionReport {
  std::string detector;
  bool suspicious = false;
  std::vector<Seq> evidence;
  std::string summary;
};

/// Log entries of a seq window, read back from the stored segment files
/// after verifying the whole stored chain from genesis.
struct LogAudit {
  std::optional<Seq> tamper_at;
  Digest head_hash{};  // chain hash preceding the first returned entry
  std::vector<oplog::LogEntry> entries;
  Seq last_seq = 0;  // last verified seq in the vault
  Digest tail_hash{};

  bool ok() const { return !tamper_at.has_value(); }
};

/// Read side of the vault, served in-process or over the query protocol.
class VaultQuery {
 public:
  virtual ~VaultQuery() = default;
  virtual VaultStatus status() = 0;
  /// Offloaded versions with lo <= timestamp <= hi, ascending write seq.
  virtual std::vector<VersionRecord> query_versions(Lpa lpa, SimTime lo, SimTime hi) = 0;
  /// Every logged Write and Trim of the lpa, ascending seq.
  virtual std::vector<VaultEvent> history(Lpa lpa) = 0;
  /// Throws Error(UnknownSegment), Error(BadIndex), or
  /// Error(TamperDetected) when the stored bytes no longer match the log.
  virtual FetchedPage fetch_page(std::uint64_t segment_id, std::uint32_t record_index) = 0;
  /// Throws Error(UnknownDetector).
  virtual DetectionReport run_detector(const std::string& name, Seq lo, Seq hi) = 0;
  virtual LogAudit audit_log(Seq lo, Seq hi) = 0;
};

}  // namespace rssd::vault
