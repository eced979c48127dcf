#include "rssd/ftl/ftl.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rssd/common/crypto.hpp"
#include "rssd/common/error.hpp"

namespace rssd::ftl {

using nand::BlockIndex;
using nand::PageIndex;

std::string_view to_string(PageLifecycle state) {
  switch (state) {
    case PageLifecycle::Free: return "Free";
    case PageLifecycle::Valid: return "Valid";
    case PageLifecycle::InvalidRetained: return "InvalidRetained";
    case PageLifecycle::OffloadPending: return "OffloadPending";
    case PageLifecycle::SafeToErase: return "SafeToErase";
  }
  return "Unknown";
}

void FtlConfig::validate() const {
  geometry.validate();
  if (!(over_provisioning >= 0.0 && over_provisioning < 1.0)) {
    throw Error(Errc::ConfigError, "over_provisioning must be in [0, 1)");
  }
  if (!(gc.free_watermark > 0.0 && gc.free_watermark < 1.0)) {
    throw Error(Errc::ConfigError, "gc free watermark must be in (0, 1)");
  }
  if (!(gc.offload_watermark > 0.0 && gc.offload_watermark < 1.0)) {
    throw Error(Errc::ConfigError, "offload watermark must be in (0, 1)");
  }
  if (geometry.total_blocks() < 3) {
    throw Error(Errc::ConfigError, "need at least 3 blocks (active, spare, data)");
  }
  if (logical_pages() == 0) throw Error(Errc::ConfigError, "logical capacity is zero");
}

std::uint64_t FtlConfig::logical_pages() const {
  auto physical = geometry.total_pages();
  auto logical = static_cast<std::uint64_t>(std::floor(static_cast<double>(physical) *
                                                       (1.0 - over_provisioning)));
  // One block always stays in reserve for GC relocation.
  return std::min(logical, physical - 2 * geometry.pages_per_block);
}

Ftl::Ftl(FtlConfig config, nand::NandArray& nand, oplog::OpLog& log)
    : config_(std::move(config)),
      nand_(nand),
      log_(log),
      logical_pages_(0),
      pages_per_block_(config_.geometry.pages_per_block) {
  config_.validate();
  if (!(nand_.geometry() == config_.geometry)) {
    throw Error(Errc::ConfigError, "FTL geometry does not match the NAND array");
  }
  logical_pages_ = config_.logical_pages();
  metas_.assign(config_.geometry.total_pages(), PageMeta{});
  blocks_.assign(config_.geometry.total_blocks(), BlockInfo{});
  for (BlockIndex b = 0; b < blocks_.size(); ++b) free_blocks_.push_back(b);
  mapping_.assign(logical_pages_, MapEntry{});
}

void Ftl::check_lpa(Lpa lpa) const {
  if (lpa >= logical_pages_) {
    throw Error(Errc::OutOfRange, "lpa " + std::to_string(lpa) + " >= logical capacity " +
                                      std::to_string(logical_pages_));
  }
}

void Ftl::advance_clock(SimTime now) { now_ = std::max(now_, now); }

std::uint64_t Ftl::free_pages_locked() const {
  std::uint64_t free = std::uint64_t{free_blocks_.size()} * pages_per_block_;
  if (active_) free += pages_per_block_ - blocks_[*active_].write_ptr;
  return free;
}

std::optional<PageIndex> Ftl::allocate(bool for_gc) {
  if (!active_ || blocks_[*active_].write_ptr == pages_per_block_) {
    // The last free block is reserved for GC relocation.
    std::size_t reserve = for_gc ? 0 : 1;
    if (free_blocks_.size() <= reserve) return std::nullopt;
    active_ = free_blocks_.front();
    free_blocks_.pop_front();
    blocks_[*active_].in_free_pool = false;
  }
  auto& info = blocks_[*active_];
  return config_.geometry.first_page(*active_) + info.write_ptr++;
}

void Ftl::set_lifecycle(PageIndex page, PageLifecycle next) {
  auto& meta = metas_[page];
  auto& block = blocks_[config_.geometry.block_of(page)];
  auto bump = [&](PageLifecycle s, int delta) {
    switch (s) {
      case PageLifecycle::Free: break;
      case PageLifecycle::Valid: block.valid += delta; counts_.valid += delta; break;
      case PageLifecycle::InvalidRetained: block.retained += delta; counts_.retained += delta; break;
      case PageLifecycle::OffloadPending: block.pending += delta; counts_.pending += delta; break;
      case PageLifecycle::SafeToErase: block.safe += delta; counts_.safe += delta; break;
    }
  };
  bump(meta.lifecycle, -1);
  bump(next, +1);
  if (meta.lifecycle == PageLifecycle::InvalidRetained) retained_.erase(meta.write_seq);
  if (next == PageLifecycle::InvalidRetained) retained_.emplace(meta.write_seq, page);
  meta.lifecycle = next;
}

void Ftl::retire(PageIndex page) {
  set_lifecycle(page, config_.retention ? PageLifecycle::InvalidRetained
                                        : PageLifecycle::SafeToErase);
}

Seq Ftl::write(Lpa lpa, ByteView data, SimTime now) {
  auto guard = lock();
  check_lpa(lpa);
  if (data.size() != page_size()) {
    throw Error(Errc::BadLength, "write of " + std::to_string(data.size()) + " bytes");
  }
  advance_clock(now);

  auto page = allocate(false);
  if (!page && reclaim_space()) page = allocate(false);
  if (!page) {
    ++stats_.capacity_rejections;
    throw Error(Errc::CapacityExhausted,
                "no free page and retained data cannot be offloaded (" +
                    std::to_string(counts_.retained + counts_.pending) + " pages awaiting offload)");
  }

  Digest digest = sha256(data);
  nand_.program(*page, data);
  auto entry = log_.append(oplog::EntryKind::Write, oplog::LpaRange{lpa, 1}, addr(*page), digest, now_);

  auto& meta = metas_[*page];
  meta = PageMeta{};
  meta.lpa = lpa;
  meta.write_seq = entry.seq;
  meta.timestamp = now_;
  meta.digest = digest;
  set_lifecycle(*page, PageLifecycle::Valid);

  auto& m = mapping_[lpa];
  if (m.state == MapState::Mapped) {
    meta.prev = m.link;
    retire(m.link.page);
  } else if (m.state == MapState::Trimmed) {
    meta.prev = m.link;
    meta.prior_trim = m.trim;
  }
  m.state = MapState::Mapped;
  m.link = VersionLink{*page, entry.seq};
  ++stats_.host_writes;
  return entry.seq;
}

std::optional<Bytes> Ftl::read(Lpa lpa, SimTime now) {
  auto guard = lock();
  check_lpa(lpa);
  advance_clock(now);
  ++stats_.host_reads;
  if (config_.log_reads) {
    log_.append(oplog::EntryKind::Read, oplog::LpaRange{lpa, 1}, std::nullopt, std::nullopt, now_);
  }
  const auto& m = mapping_[lpa];
  if (m.state != MapState::Mapped) return std::nullopt;
  return nand_.read(m.link.page);
}

Seq Ftl::trim(Lpa start, std::uint64_t count, SimTime now) {
  auto guard = lock();
  if (start > logical_pages_ || count > logical_pages_ - start) {
    throw Error(Errc::OutOfRange, "trim [" + std::to_string(start) + ", +" + std::to_string(count) +
                                      ") exceeds logical capacity");
  }
  advance_clock(now);
  auto entry = log_.append(oplog::EntryKind::Trim, oplog::LpaRange{start, count}, std::nullopt,
                           std::nullopt, now_);
  for (Lpa lpa = start; lpa < start + count; ++lpa) {
    auto& m = mapping_[lpa];
    if (m.state != MapState::Mapped) continue;
    retire(m.link.page);
    m.state = MapState::Trimmed;
    m.trim = TrimMark{entry.seq, now_};
    ++stats_.trimmed_pages;
  }
  ++stats_.host_trims;
  return entry.seq;
}

std::optional<BlockIndex> Ftl::pick_victim() const {
  std::optional<BlockIndex> best;
  std::uint64_t best_wear = 0;
  for (BlockIndex b = 0; b < blocks_.size(); ++b) {
    const auto& info = blocks_[b];
    if (info.in_free_pool || (active_ && *active_ == b)) continue;
    if (info.retained != 0 || info.pending != 0 || info.safe == 0) continue;
    if (!best || info.safe > blocks_[*best].safe ||
        (info.safe == blocks_[*best].safe && nand_.erase_count(b) < best_wear)) {
      best = b;
      best_wear = nand_.erase_count(b);
    }
  }
  return best;
}

void Ftl::collect(BlockIndex victim, GcReport& report) {
  PageIndex first = config_.geometry.first_page(victim);
  for (PageIndex p = first; p < first + pages_per_block_; ++p) {
    if (metas_[p].lifecycle != PageLifecycle::Valid) continue;
    auto dst = allocate(true);
    if (!dst) throw Error(Errc::Internal, "GC relocation found no free page");
    nand_.program(*dst, nand_.view(p));
    auto& src = metas_[p];
    auto& moved = metas_[*dst];
    moved = src;
    moved.lifecycle = PageLifecycle::Free;
    moved.bundle = 0;
    set_lifecycle(*dst, PageLifecycle::Valid);
    log_.append(oplog::EntryKind::GcMove, oplog::LpaRange{src.lpa, 1}, addr(*dst), src.digest, now_);
    mapping_[src.lpa].link.page = *dst;
    // The source copy stays readable until the erase below; its content is
    // current at the new location.
    set_lifecycle(p, PageLifecycle::SafeToErase);
    ++report.pages_moved;
    ++stats_.gc_pages_moved;
  }
  if (erase_observer_) {
    erase_observer_(victim, std::span<const PageMeta>(metas_.data() + first, pages_per_block_));
  }
  for (PageIndex p = first; p < first + pages_per_block_; ++p) {
    if (metas_[p].lifecycle != PageLifecycle::Free) set_lifecycle(p, PageLifecycle::Free);
    metas_[p] = PageMeta{};
  }
  nand_.erase(victim);
  auto& info = blocks_[victim];
  info = BlockInfo{};
  free_blocks_.push_back(victim);
  ++report.blocks_erased;
  ++stats_.gc_blocks_erased;
}

GcReport Ftl::garbage_collect() {
  auto guard = lock();
  GcReport report;
  auto total = static_cast<double>(config_.geometry.total_pages());
  auto target = static_cast<std::uint64_t>(std::ceil(config_.gc.free_watermark * total));
  while (free_pages_locked() < target) {
    auto victim = pick_victim();
    if (!victim) break;
    collect(*victim, report);
  }
  report.pages_awaiting_offload = counts_.retained + counts_.pending;
  return report;
}

GcReport Ftl::force_garbage_collect() {
  auto guard = lock();
  GcReport report;
  while (auto victim = pick_victim()) collect(*victim, report);
  report.pages_awaiting_offload = counts_.retained + counts_.pending;
  return report;
}

bool Ftl::reclaim_space() {
  if (in_reclaim_) return false;
  in_reclaim_ = true;
  bool ok = false;
  // Each round either erases a block or lets the hook ship retained pages;
  // stop once a host allocation can succeed or nothing moves.
  for (std::size_t round = 0; round < 4 * blocks_.size() + 8; ++round) {
    if (free_blocks_.size() > 1) {
      ok = true;
      break;
    }
    if (auto victim = pick_victim()) {
      GcReport report;
      collect(*victim, report);
      continue;
    }
    if (!reclaim_hook_ || !reclaim_hook_()) break;
  }
  in_reclaim_ = false;
  return ok || free_blocks_.size() > 1;
}

std::vector<RetainedPage> Ftl::retained_inventory() const {
  auto guard = lock();
  std::vector<RetainedPage> out;
  out.reserve(retained_.size());
  for (const auto& [seq, page] : retained_) out.push_back(RetainedPage{seq, addr(page)});
  return out;
}

bool Ftl::has_claimable_retained() const {
  auto guard = lock();
  for (const auto& [seq, page] : retained_) {
    if (metas_[page].bundle == 0) return true;
  }
  return false;
}

std::vector<ClaimedPage> Ftl::claim_retained(std::size_t max_pages, std::uint64_t bundle_id) {
  auto guard = lock();
  std::vector<PageIndex> picked;
  for (const auto& [seq, page] : retained_) {
    if (picked.size() >= max_pages) break;
    if (metas_[page].bundle == 0) picked.push_back(page);
  }
  std::vector<ClaimedPage> out;
  out.reserve(picked.size());
  for (auto page : picked) {
    auto& meta = metas_[page];
    meta.bundle = bundle_id;
    set_lifecycle(page, PageLifecycle::OffloadPending);
    out.push_back(ClaimedPage{PageRef{page, meta.write_seq, meta.digest}, meta.lpa, meta.timestamp,
                              nand_.read(page)});
  }
  return out;
}

void Ftl::reclaim(std::span<const PageRef> pages) {
  auto guard = lock();
  for (const auto& ref : pages) {
    auto& meta = metas_[ref.page];
    if (meta.write_seq != ref.write_seq) throw Error(Errc::Internal, "reclaim of a reused page");
    if (meta.lifecycle == PageLifecycle::InvalidRetained) {
      set_lifecycle(ref.page, PageLifecycle::OffloadPending);
    } else if (meta.lifecycle != PageLifecycle::OffloadPending) {
      throw Error(Errc::Internal, "reclaim of a page in state " + std::string(to_string(meta.lifecycle)));
    }
  }
}

void Ftl::acknowledge(std::span<const PageRef> pages) {
  auto guard = lock();
  for (const auto& ref : pages) {
    auto& meta = metas_[ref.page];
    if (meta.write_seq != ref.write_seq || meta.digest != ref.digest ||
        meta.lifecycle != PageLifecycle::OffloadPending) {
      throw Error(Errc::Internal, "ack does not match the pending page at seq " +
                                      std::to_string(ref.write_seq));
    }
    meta.bundle = 0;
    set_lifecycle(ref.page, PageLifecycle::SafeToErase);
  }
}

void Ftl::rollback(std::span<const PageRef> pages) {
  auto guard = lock();
  for (const auto& ref : pages) {
    auto& meta = metas_[ref.page];
    if (meta.write_seq == ref.write_seq && meta.lifecycle == PageLifecycle::OffloadPending) {
      set_lifecycle(ref.page, PageLifecycle::InvalidRetained);
    }
  }
}

LocalHistory Ftl::local_history(Lpa lpa) const {
  auto guard = lock();
  check_lpa(lpa);
  LocalHistory h;
  const auto& m = mapping_[lpa];
  if (m.state == MapState::Trimmed) {
    h.events.push_back(LocalEvent{m.trim.seq, m.trim.timestamp, LocalEventKind::Trim});
  }
  VersionLink cur = m.state == MapState::Unmapped ? VersionLink{} : m.link;
  while (cur.present()) {
    const auto& meta = metas_[cur.page];
    if (meta.lifecycle == PageLifecycle::Free || meta.write_seq != cur.seq || meta.lpa != lpa) {
      h.missing_prev = cur.seq;
      break;
    }
    h.events.push_back(LocalEvent{meta.write_seq, meta.timestamp, LocalEventKind::Write, cur.page,
                                  meta.digest, meta.lifecycle});
    if (meta.prior_trim) {
      h.events.push_back(
          LocalEvent{meta.prior_trim->seq, meta.prior_trim->timestamp, LocalEventKind::Trim});
    }
    cur = meta.prev;
  }
  std::reverse(h.events.begin(), h.events.end());
  return h;
}

std::optional<Bytes> Ftl::read_version(PageIndex page, Seq write_seq) const {
  auto guard = lock();
  if (page >= metas_.size()) return std::nullopt;
  const auto& meta = metas_[page];
  if (meta.lifecycle == PageLifecycle::Free || meta.write_seq != write_seq) return std::nullopt;
  return nand_.read(page);
}

PageMeta Ftl::page_meta(PageIndex page) const {
  auto guard = lock();
  return metas_.at(page);
}

MapState Ftl::map_state(Lpa lpa) const {
  auto guard = lock();
  check_lpa(lpa);
  return mapping_[lpa].state;
}

std::optional<PageRef> Ftl::current_version(Lpa lpa) const {
  auto guard = lock();
  check_lpa(lpa);
  const auto& m = mapping_[lpa];
  if (m.state != MapState::Mapped) return std::nullopt;
  return PageRef{m.link.page, m.link.seq, metas_[m.link.page].digest};
}

PageCounts Ftl::page_counts() const {
  auto guard = lock();
  PageCounts c = counts_;
  c.free = free_pages_locked();
  return c;
}

FtlStats Ftl::stats() const {
  auto guard = lock();
  return stats_;
}

double Ftl::free_fraction() const {
  auto guard = lock();
  return static_cast<double>(free_pages_locked()) /
         static_cast<double>(config_.geometry.total_pages());
}

double Ftl::retained_fraction() const {
  auto guard = lock();
  return static_cast<double>(counts_.retained) / static_cast<double>(config_.geometry.total_pages());
}

SimTime Ftl::now() const {
  auto guard = lock();
  return now_;
}

void Ftl::set_reclaim_hook(ReclaimHook hook) {
  auto guard = lock();
  reclaim_hook_ = std::move(hook);
}

void Ftl::set_erase_observer(EraseObserver observer) {
  auto guard = lock();
  erase_observer_ = std::move(observer);
}

std::vector<std::string> Ftl::check_invariants() const {
  auto guard = lock();
  std::vector<std::string> out;
  PageCounts recount;
  std::vector<std::uint64_t> valid_per_lpa(logical_pages_, 0);
  for (PageIndex p = 0; p < metas_.size(); ++p) {
    const auto& meta = metas_[p];
    switch (meta.lifecycle) {
      case PageLifecycle::Free: break;
      case PageLifecycle::Valid:
        ++recount.valid;
        if (meta.lpa < logical_pages_) ++valid_per_lpa[meta.lpa];
        break;
      case PageLifecycle::InvalidRetained: {
        ++recount.retained;
        auto it = retained_.find(meta.write_seq);
        if (it == retained_.end() || it->second != p) {
          out.push_back("retained page missing from inventory at seq " + std::to_string(meta.write_seq));
        }
        break;
      }
      case PageLifecycle::OffloadPending: ++recount.pending; break;
      case PageLifecycle::SafeToErase: ++recount.safe; break;
    }
    if (meta.lifecycle != PageLifecycle::Free) {
      if (nand_.state(p) != nand::RawPageState::Programmed) {
        out.push_back("live page " + std::to_string(p) + " is not programmed");
      }
      if (meta.prev.present() && meta.prev.seq >= meta.write_seq) {
        out.push_back("prev_version not strictly older at seq " + std::to_string(meta.write_seq));
      }
    }
  }
  if (recount.valid != counts_.valid || recount.retained != counts_.retained ||
      recount.pending != counts_.pending || recount.safe != counts_.safe) {
    out.push_back("lifecycle counters disagree with page metadata");
  }
  if (retained_.size() != counts_.retained) out.push_back("retained index size mismatch");
  for (Lpa lpa = 0; lpa < logical_pages_; ++lpa) {
    const auto& m = mapping_[lpa];
    if (m.state == MapState::Mapped) {
      const auto& meta = metas_[m.link.page];
      if (meta.lpa != lpa || meta.lifecycle != PageLifecycle::Valid || meta.write_seq != m.link.seq) {
        out.push_back("mapping for lpa " + std::to_string(lpa) + " points at a non-valid page");
      }
      if (valid_per_lpa[lpa] != 1) {
        out.push_back("lpa " + std::to_string(lpa) + " has " + std::to_string(valid_per_lpa[lpa]) +
                      " valid pages");
      }
    } else if (valid_per_lpa[lpa] != 0) {
      out.push_back("unmapped lpa " + std::to_string(lpa) + " has a valid page");
    }
  }
  return out;
}

}  // namespace rssd::ftl
