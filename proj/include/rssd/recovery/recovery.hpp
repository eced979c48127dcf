#pragma once

#include <limits>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rssd/device/device.hpp"
#include "rssd/vault/query.hpp"

namespace rssd::recovery {

enum class VersionKind : std::uint8_t { Write, Trim };
enum class Location : std::uint8_t { Local, Remote, TrimMarker, Missing };

std::string_view to_string(VersionKind kind);
std::string_view to_string(Location location);

struct VersionEntry {
  Seq seq = 0;
  SimTime timestamp = 0;
  VersionKind kind = VersionKind::Write;
  Location location = Location::Missing;
  Digest digest{};  // Write only
  nand::PageIndex page = nand::kNoPage;  // Local
  nand::PhysPageAddr ppa;                 // Local
  std::uint64_t segment_id = 0;           // Remote
  std::uint32_t record_index = 0;         // Remote
};

/// Full timeline of one lpa, ascending seq.
struct VersionChain {
  Lpa lpa = 0;
  std::vector<VersionEntry> entries;

  bool complete() const;
};

inline constexpr Seq kLatestSeq = std::numeric_limits<Seq>::max();

/// Point in time: the latest event with timestamp <= time, and seq <=
/// max_seq when two events share a timestamp.
struct AsOf {
  SimTime time = 0;
  Seq max_seq = kLatestSeq;
};

enum class RestoreStatus : std::uint8_t { Data, Unmapped, Lost };

struct RestoredPage {
  Lpa lpa = 0;
  RestoreStatus status = RestoreStatus::Unmapped;
  Seq seq = 0;  // deciding event
  Location source = Location::Missing;
  Bytes data;
};

struct OpLabel {
  std::string label;  // "benign" or "attack"
  std::string phase;
};
using GroundTruth = std::unordered_map<Seq, OpLabel>;

struct ReplayCheck {
  bool ok = true;
  std::uint64_t lpas_checked = 0;
  std::optional<Lpa> first_mismatch;
  std::string detail;
};

struct EvidenceChain {
  Seq lo = 0;
  Seq hi = 0;
  std::vector<oplog::LogEntry> entries;
  bool verified = false;
  std::optional<Seq> tamper_at;
  ReplayCheck replay;
};

/// Recovery and post-attack analysis over the device's local state and
/// the vault. Read-only with respect to the FTL; every call first fixes
/// the device's last seq and ignores later operations.
using ChainSource = std::function<VersionChain(Lpa lpa, Seq max_seq)>;

/// Replays the window's Write/Trim entries over the state just before `lo`
/// and compares the result with the state at `hi`, per touched lpa.
ReplayCheck replay_window(const std::vector<oplog::LogEntry>& window, Seq lo, Seq hi,
                          const ChainSource& chain_of);

/// Version chain known to the vault alone (every version is Remote,
/// Missing or a trim marker).
VersionChain vault_chain(vault::VaultQuery& vault, Lpa lpa, Seq max_seq = kLatestSeq);

/// Evidence chain read purely from the vault, for runs whose device is
/// gone. The vault must hold the whole window.
EvidenceChain verify_vault_window(vault::VaultQuery& vault, Seq lo, Seq hi);

class Recovery {
 public:
  /// `vault` may be null when no vault is configured.
  Recovery(device::Device& device, vault::VaultQuery* vault);

  /// Merges the local version walk with the vault's history. Throws
  /// Error(VaultUnreachable) when older versions live only in the vault
  /// and it cannot be reached.
  VersionChain backtrack(Lpa lpa, Seq max_seq = kLatestSeq);

  RestoredPage restore_one(Lpa lpa, AsOf as_of);
  /// Throws Error(OutOfRange) for lpas beyond capacity or a time after
  /// the device clock.
  std::vector<RestoredPage> restore(Lpa start, std::uint64_t count, AsOf as_of);

  /// Verified evidence chain; throws Error(TamperDetected, seq).
  EvidenceChain build_evidence_chain(Seq lo, Seq hi);
  /// Same, but reports tampering in the result instead of throwing.
  EvidenceChain verify_window(Seq lo, Seq hi);

 private:
  std::optional<Bytes> read_entry(const VersionEntry& entry, Lpa lpa);

  device::Device& device_;
  vault::VaultQuery* vault_;
};

}  // namespace rssd::recovery
