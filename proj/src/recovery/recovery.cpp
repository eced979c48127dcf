#include "rssd/recovery/recovery.hpp"

#include <algorithm>
#include <set>

#include "rssd/common/crypto.hpp"
#include "rssd/common/error.hpp"

namespace rssd::recovery {

using oplog::EntryKind;
using oplog::LogEntry;

std::string_view to_string(VersionKind kind) { return kind == VersionKind::Write ? "Write" : "Trim"; }

std::string_view to_string(Location location) {
  switch (location) {
    case Location::Local: return "Local";
    case Location::Remote: return "Remote";
    case Location::TrimMarker: return "TrimMarker";
    case Location::Missing: return "Missing";
  }
  return "?";
}

bool VersionChain::complete() const {
  return std::none_of(entries.begin(), entries.end(),
                      [](const VersionEntry& e) { return e.location == Location::Missing; });
}

Recovery::Recovery(device::Device& device, vault::VaultQuery* vault) : device_(device), vault_(vault) {}

VersionChain Recovery::backtrack(Lpa lpa, Seq max_seq) {
  auto& ftl = device_.ftl();
  if (lpa >= ftl.logical_pages()) {
    throw Error(Errc::OutOfRange, "lpa " + std::to_string(lpa) + " beyond logical capacity");
  }
  ftl::LocalHistory local;
  Seq snapshot;
  {
    auto guard = ftl.lock();
    snapshot = std::min(max_seq, device_.log().last_seq());
    local = ftl.local_history(lpa);
  }

  std::map<Seq, VersionEntry> merged;
  bool need_vault = local.missing_prev.has_value();
  if (vault_) {
    try {
      for (const auto& ev : vault_->history(lpa)) {
        VersionEntry v;
        v.seq = ev.seq;
        v.timestamp = ev.timestamp;
        if (ev.kind == vault::EventKind::Trim) {
          v.kind = VersionKind::Trim;
          v.location = Location::TrimMarker;
        } else {
          v.digest = ev.digest;
          v.location = ev.offloaded() ? Location::Remote : Location::Missing;
          v.segment_id = ev.segment_id;
          v.record_index = ev.record_index;
        }
        merged[v.seq] = v;
      }
    } catch (const Error& e) {
      if (e.code() != Errc::VaultUnreachable || need_vault) throw;
    }
  } else if (need_vault) {
    throw Error(Errc::VaultUnreachable, "older versions of lpa " + std::to_string(lpa) +
                                            " are offloaded but no vault is configured");
  }

  for (const auto& ev : local.events) {
    auto& v = merged[ev.seq];
    v.seq = ev.seq;
    v.timestamp = ev.timestamp;
    if (ev.kind == ftl::LocalEventKind::Trim) {
      v.kind = VersionKind::Trim;
      v.location = Location::TrimMarker;
    } else {
      v.kind = VersionKind::Write;
      v.location = Location::Local;
      v.digest = ev.digest;
      v.page = ev.page;
      v.ppa = ftl.config().geometry.address_of(ev.page);
    }
  }
  if (local.missing_prev && !merged.count(*local.missing_prev)) {
    VersionEntry v;
    v.seq = *local.missing_prev;
    v.location = Location::Missing;
    merged[v.seq] = v;
  }

  VersionChain chain;
  chain.lpa = lpa;
  for (auto& [seq, v] : merged) {
    if (seq > snapshot) break;
    chain.entries.push_back(v);
  }
  return chain;
}

std::optional<Bytes> Recovery::read_entry(const VersionEntry& entry, Lpa lpa) {
  if (entry.location == Location::Local) {
    auto data = device_.ftl().read_version(entry.page, entry.seq);
    if (data && sha256(*data) == entry.digest) return data;
    // The page was reclaimed after the walk; the vault must have it now.
    for (const auto& v : backtrack(lpa, entry.seq).entries) {
      if (v.seq == entry.seq && v.location == Location::Remote) return read_entry(v, lpa);
    }
    return std::nullopt;
  }
  if (entry.location == Location::Remote) {
    if (!vault_) throw Error(Errc::VaultUnreachable, "no vault configured");
    auto page = vault_->fetch_page(entry.segment_id, entry.record_index);
    if (page.write_seq != entry.seq || page.lpa != lpa || sha256(page.data) != entry.digest) {
      throw Error(Errc::TamperDetected, "vault page does not match its logged digest", entry.seq);
    }
    return std::move(page.data);
  }
  return std::nullopt;
}

RestoredPage Recovery::restore_one(Lpa lpa, AsOf as_of) {
  auto chain = backtrack(lpa, as_of.max_seq);
  RestoredPage out;
  out.lpa = lpa;
  const VersionEntry* pick = nullptr;
  for (const auto& v : chain.entries) {
    if (v.timestamp <= as_of.time && v.seq <= as_of.max_seq) pick = &v;
  }
  if (!pick) return out;
  out.seq = pick->seq;
  out.source = pick->location;
  if (pick->kind == VersionKind::Trim) return out;
  if (auto data = read_entry(*pick, lpa)) {
    out.status = RestoreStatus::Data;
    out.data = std::move(*data);
  } else {
    out.status = RestoreStatus::Lost;
    out.source = Location::Missing;
  }
  return out;
}

std::vector<RestoredPage> Recovery::restore(Lpa start, std::uint64_t count, AsOf as_of) {
  auto capacity = device_.logical_pages();
  if (start > capacity || count > capacity - start) {
    throw Error(Errc::OutOfRange, "restore range exceeds logical capacity");
  }
  if (as_of.time > device_.ftl().now()) {
    throw Error(Errc::OutOfRange, "as_of is after the device clock");
  }
  std::vector<RestoredPage> out;
  out.reserve(count);
  for (Lpa lpa = start; lpa < start + count; ++lpa) out.push_back(restore_one(lpa, as_of));
  return out;
}

EvidenceChain Recovery::build_evidence_chain(Seq lo, Seq hi) {
  auto chain = verify_window(lo, hi);
  if (chain.tamper_at) {
    throw Error(Errc::TamperDetected, "evidence chain broken at seq " + std::to_string(*chain.tamper_at),
                *chain.tamper_at);
  }
  return chain;
}

EvidenceChain Recovery::verify_window(Seq lo, Seq hi) {
  auto& log = device_.log();
  if (!log.enabled()) throw Error(Errc::ConfigError, "operation logging is disabled on this device");
  Seq last = log.last_seq();
  if (lo < 1 || hi < lo || hi > last) {
    throw Error(Errc::OutOfRange, "window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                      "] outside [1, " + std::to_string(last) + "]");
  }
  EvidenceChain out;
  out.lo = lo;
  out.hi = hi;
  auto tampered = [&](Seq seq) {
    out.tamper_at = seq;
    out.verified = false;
    return out;
  };

  auto resident = log.resident();
  Seq r_first = resident.entries.empty() ? last + 1 : resident.entries.front().seq;
  std::vector<LogEntry> combined;
  Digest head{};
  Seq start = 1;
  if (r_first > 1 && lo < r_first) {
    if (!vault_) throw Error(Errc::VaultUnreachable, "older log entries live in the vault; none configured");
  }
  if (r_first > 1 && vault_) {
    start = std::min(lo, r_first - 1);
    auto audit = vault_->audit_log(start, hi);
    if (audit.tamper_at) return tampered(*audit.tamper_at);
    if (audit.last_seq + 1 < r_first) return tampered(audit.last_seq + 1);
    combined = std::move(audit.entries);
    head = audit.head_hash;
    for (const auto& e : resident.entries) {
      if (e.seq > hi) break;
      if (e.seq <= audit.last_seq) {
        if (e.seq >= start && !(combined[e.seq - start] == e)) return tampered(e.seq);
        continue;
      }
      combined.push_back(e);
    }
  } else {
    if (r_first > 1) {
      start = r_first;
      head = resident.head_hash;
    }
    for (const auto& e : resident.entries) {
      if (e.seq > hi) break;
      combined.push_back(e);
    }
  }

  auto check = oplog::verify_chain(combined, head, start);
  if (!check.ok()) return tampered(*check.tamper_at);
  if (combined.empty() || combined.back().seq != hi) {
    return tampered(combined.empty() ? start : combined.back().seq + 1);
  }
  for (auto& e : combined) {
    if (e.seq >= lo) out.entries.push_back(std::move(e));
  }
  out.verified = true;
  out.replay = replay_window(out.entries, lo, hi, [this](Lpa lpa, Seq max_seq) { return backtrack(lpa, max_seq); });
  return out;
}

ReplayCheck replay_window(const std::vector<LogEntry>& window, Seq lo, Seq hi, const ChainSource& chain_of) {
  using State = std::optional<Digest>;
  std::set<Lpa> touched;
  for (const auto& e : window) {
    if (!e.lpa_range) continue;
    if (e.kind == EntryKind::Write || e.kind == EntryKind::Trim || e.kind == EntryKind::GcMove) {
      for (Lpa l = e.lpa_range->start; l < e.lpa_range->start + e.lpa_range->length; ++l) touched.insert(l);
    }
  }

  auto state_at = [](const VersionChain& chain, Seq seq) -> State {
    State s;
    for (const auto& v : chain.entries) {
      if (v.seq > seq) break;
      if (v.kind == VersionKind::Write) {
        s = v.digest;
      } else {
        s.reset();
      }
    }
    return s;
  };

  std::map<Lpa, State> replayed, expected;
  for (Lpa lpa : touched) {
    auto chain = chain_of(lpa, hi);
    replayed[lpa] = state_at(chain, lo - 1);
    expected[lpa] = state_at(chain, hi);
  }

  ReplayCheck check;
  check.lpas_checked = touched.size();
  auto fail = [&](Lpa lpa, const std::string& why) {
    if (check.ok) {
      check.ok = false;
      check.first_mismatch = lpa;
      check.detail = why;
    }
  };
  for (const auto& e : window) {
    if (!e.lpa_range) continue;
    switch (e.kind) {
      case EntryKind::Write:
        replayed[e.lpa_range->start] = e.payload_digest;
        break;
      case EntryKind::Trim:
        for (Lpa l = e.lpa_range->start; l < e.lpa_range->start + e.lpa_range->length; ++l) replayed[l].reset();
        break;
      case EntryKind::GcMove:
        if (replayed[e.lpa_range->start] != e.payload_digest) {
          fail(e.lpa_range->start, "GC move at seq " + std::to_string(e.seq) + " carries a stale digest");
        }
        break;
      default:
        break;
    }
  }
  for (const auto& [lpa, state] : expected) {
    if (replayed[lpa] != state) fail(lpa, "replayed state differs from the version chain");
  }
  return check;
}

VersionChain vault_chain(vault::VaultQuery& vault, Lpa lpa, Seq max_seq) {
  VersionChain chain;
  chain.lpa = lpa;
  for (const auto& ev : vault.history(lpa)) {
    if (ev.seq > max_seq) break;
    VersionEntry v;
    v.seq = ev.seq;
    v.timestamp = ev.timestamp;
    if (ev.kind == vault::EventKind::Trim) {
      v.kind = VersionKind::Trim;
      v.location = Location::TrimMarker;
    } else {
      v.digest = ev.digest;
      v.location = ev.offloaded() ? Location::Remote : Location::Missing;
      v.segment_id = ev.segment_id;
      v.record_index = ev.record_index;
    }
    chain.entries.push_back(v);
  }
  return chain;
}

EvidenceChain verify_vault_window(vault::VaultQuery& vault, Seq lo, Seq hi) {
  if (lo < 1 || hi < lo) {
    throw Error(Errc::OutOfRange, "window [" + std::to_string(lo) + ", " + std::to_string(hi) + "] is empty");
  }
  EvidenceChain out;
  out.lo = lo;
  out.hi = hi;
  auto audit = vault.audit_log(lo, hi);
  if (audit.tamper_at) {
    out.tamper_at = audit.tamper_at;
    return out;
  }
  if (audit.last_seq < hi) {
    throw Error(Errc::OutOfRange, "window end " + std::to_string(hi) + " beyond the vault's last seq " +
                                      std::to_string(audit.last_seq));
  }
  out.entries = std::move(audit.entries);
  if (out.entries.empty() || out.entries.front().seq != lo || out.entries.back().seq != hi) {
    out.tamper_at = out.entries.empty() ? lo : out.entries.front().seq;
    out.entries.clear();
    return out;
  }
  out.verified = true;
  out.replay = replay_window(out.entries, lo, hi,
                             [&vault](Lpa lpa, Seq max_seq) { return vault_chain(vault, lpa, max_seq); });
  return out;
}

}  // namespace rssd::recovery
