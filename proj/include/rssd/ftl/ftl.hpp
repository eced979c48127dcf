#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rssd/common/types.hpp"
#include "rssd/nand/geometry.hpp"
#include "rssd/nand/nand_array.hpp"
#include "rssd/oplog/op_log.hpp"

namespace rssd::ftl {

/// Retention lifecycle of a physical page. Pages in InvalidRetained or
/// OffloadPending are never erased.
enum class PageLifecycle : std::uint8_t { Free, Valid, InvalidRetained, OffloadPending, SafeToErase };

std::string_view to_string(PageLifecycle state);

inline constexpr Lpa kUnmappedLpa = ~Lpa{0};

/// Points at an older version: its physical page and the write seq that
/// page must still carry. A mismatch means the page was erased and reused,
/// so the version now lives only in the vault.
struct VersionLink {
  nand::PageIndex page = nand::kNoPage;
  Seq seq = 0;

  bool present() const { return page != nand::kNoPage; }
};

struct TrimMark {
  Seq seq = 0;
  SimTime timestamp = 0;
};

struct PageMeta {
  Lpa lpa = kUnmappedLpa;
  Seq write_seq = 0;
  SimTime timestamp = 0;
  VersionLink prev;
  std::optional<TrimMark> prior_trim;  // trim between prev and this version
  PageLifecycle lifecycle = PageLifecycle::Free;
  Digest digest{};
  std::uint64_t bundle = 0;  // offload segment holding the page until acked
};

struct GcPolicy {
  double free_watermark = 0.20;      // GC when free pages drop below this fraction
  double offload_watermark = 0.30;   // offload when retained pages exceed this fraction
};

struct FtlConfig {
  nand::Geometry geometry = nand::Geometry::desk_scale();
  double over_provisioning = 0.20;
  GcPolicy gc;
  /// false gives a conventional FTL: stale and trimmed pages are
  /// immediately reclaimable.
  bool retention = true;
  bool log_reads = false;

  void validate() const;
  std::uint64_t logical_pages() const;
};

struct GcReport {
  std::uint64_t blocks_erased = 0;
  std::uint64_t pages_moved = 0;
  std::uint64_t pages_awaiting_offload = 0;
};

struct FtlStats {
  std::uint64_t host_writes = 0;
  std::uint64_t host_reads = 0;
  std::uint64_t host_trims = 0;
  std::uint64_t trimmed_pages = 0;
  std::uint64_t gc_blocks_erased = 0;
  std::uint64_t gc_pages_moved = 0;
  std::uint64_t capacity_rejections = 0;
};

struct PageCounts {
  std::uint64_t free = 0;
  std::uint64_t valid = 0;
  std::uint64_t retained = 0;
  std::uint64_t pending = 0;
  std::uint64_t safe = 0;
};

struct RetainedPage {
  Seq write_seq = 0;
  nand::PhysPageAddr ppa;
};

/// Identifies one version held in one physical page.
struct PageRef {
  nand::PageIndex page = nand::kNoPage;
  Seq write_seq = 0;
  Digest digest{};
};

struct ClaimedPage {
  PageRef ref;
  Lpa lpa = 0;
  SimTime timestamp = 0;
  Bytes data;
};

enum class LocalEventKind : std::uint8_t { Write, Trim };

struct LocalEvent {
  Seq seq = 0;
  SimTime timestamp = 0;
  LocalEventKind kind = LocalEventKind::Write;
  nand::PageIndex page = nand::kNoPage;  // Write only
  Digest digest{};                       // Write only
  PageLifecycle lifecycle = PageLifecycle::Free;
};

/// The locally reachable suffix of an lpa's history.
struct LocalHistory {
  std::vector<LocalEvent> events;  // ascending seq
  /// Set when the oldest reachable version links to a version that is no
  /// longer on flash; the value is that version's write seq.
  std::optional<Seq> missing_prev;
};

enum class MapState : std::uint8_t { Unmapped, Mapped, Trimmed };

/// Called whenever the FTL runs out of space and GC alone cannot help.
/// Returns true if it made progress (e.g. offloaded retained pages).
using ReclaimHook = std::function<bool()>;
/// Observes a block's page metadata right before it is erased.
using EraseObserver = std::function<void(nand::BlockIndex, std::span<const PageMeta>)>;

/// Ransomware-aware page-mapping FTL.
///
/// Every overwritten or trimmed version is retained until the offload path
/// has it acknowledged by the vault; GC only erases SafeToErase pages and
/// relocates Valid ones. All public members are serialized by one
/// recursive mutex, so the offload path can re-enter from the reclaim hook.
class Ftl {
 public:
  Ftl(FtlConfig config, nand::NandArray& nand, oplog::OpLog& log);

  const FtlConfig& config() const { return config_; }
  std::uint64_t logical_pages() const { return logical_pages_; }
  std::uint32_t page_size() const { return config_.geometry.page_size; }

  // Host command path.
  Seq write(Lpa lpa, ByteView data, SimTime now);
  std::optional<Bytes> read(Lpa lpa, SimTime now);
  Seq trim(Lpa start, std::uint64_t count, SimTime now);

  /// Watermark-driven GC: no-op while free pages are at or above the
  /// watermark; otherwise collects greedy victims until it is reached or no
  /// block is eligible.
  GcReport garbage_collect();
  /// Collects every eligible block regardless of the watermark.
  GcReport force_garbage_collect();

  /// InvalidRetained pages, ascending by write seq.
  std::vector<RetainedPage> retained_inventory() const;
  /// True if some InvalidRetained page is not yet bundled into a segment.
  bool has_claimable_retained() const;

  // Offload transitions.
  /// Claims up to max_pages oldest unbundled InvalidRetained pages
  /// (InvalidRetained -> OffloadPending) and tags them with bundle_id.
  std::vector<ClaimedPage> claim_retained(std::size_t max_pages, std::uint64_t bundle_id);
  /// Re-claims previously rolled-back pages for a resend.
  void reclaim(std::span<const PageRef> pages);
  /// OffloadPending -> SafeToErase after a vault ack; digests must match.
  void acknowledge(std::span<const PageRef> pages);
  /// OffloadPending -> InvalidRetained after a failed ship.
  void rollback(std::span<const PageRef> pages);

  // Read-only inspection for recovery and tests.
  LocalHistory local_history(Lpa lpa) const;
  std::optional<Bytes> read_version(nand::PageIndex page, Seq write_seq) const;
  PageMeta page_meta(nand::PageIndex page) const;
  MapState map_state(Lpa lpa) const;
  std::optional<PageRef> current_version(Lpa lpa) const;
  PageCounts page_counts() const;
  FtlStats stats() const;
  double free_fraction() const;
  double retained_fraction() const;
  SimTime now() const;

  /// Structural invariant check; returns human-readable violations.
  std::vector<std::string> check_invariants() const;

  void set_reclaim_hook(ReclaimHook hook);
  void set_erase_observer(EraseObserver observer);

  std::unique_lock<std::recursive_mutex> lock() const { return std::unique_lock(mutex_); }

 private:
  struct BlockInfo {
    std::uint32_t write_ptr = 0;
    std::uint32_t valid = 0;
    std::uint32_t retained = 0;
    std::uint32_t pending = 0;
    std::uint32_t safe = 0;
    bool in_free_pool = true;
  };

  struct MapEntry {
    MapState state = MapState::Unmapped;
    VersionLink link;  // Mapped: the valid page; Trimmed: the trimmed page
    TrimMark trim;     // Trimmed only
  };

  void check_lpa(Lpa lpa) const;
  void advance_clock(SimTime now);
  std::optional<nand::PageIndex> allocate(bool for_gc);
  bool reclaim_space();
  void set_lifecycle(nand::PageIndex page, PageLifecycle next);
  void retire(nand::PageIndex page);
  std::optional<nand::BlockIndex> pick_victim() const;
  void collect(nand::BlockIndex victim, GcReport& report);
  std::uint64_t free_pages_locked() const;
  nand::PhysPageAddr addr(nand::PageIndex page) const { return config_.geometry.address_of(page); }

  FtlConfig config_;
  nand::NandArray& nand_;
  oplog::OpLog& log_;
  std::uint64_t logical_pages_;
  std::uint32_t pages_per_block_;

  mutable std::recursive_mutex mutex_;
  std::vector<PageMeta> metas_;
  std::vector<BlockInfo> blocks_;
  std::deque<nand::BlockIndex> free_blocks_;
  std::optional<nand::BlockIndex> active_;
  std::vector<MapEntry> mapping_;
  std::map<Seq, nand::PageIndex> retained_;  // InvalidRetained pages by write seq
  PageCounts counts_;
  FtlStats stats_;
  SimTime now_ = 0;
  bool in_reclaim_ = false;

  ReclaimHook reclaim_hook_;
  EraseObserver erase_observer_;
};

}  // namespace rssd::ftl
