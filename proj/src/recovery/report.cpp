#include "rssd/recovery/report.hpp"

#include <ostream>

#include <json.hpp>

#include "rssd/common/codec.hpp"
#include "rssd/common/crypto.hpp"

namespace rssd::recovery {

using nlohmann::json;

namespace {

std::string location_detail(const VersionEntry& v) {
  if (v.location == Location::Local) return "ppa=" + nand::to_string(v.ppa);
  if (v.location == Location::Remote) {
    return "segment=" + std::to_string(v.segment_id) + "/" + std::to_string(v.record_index);
  }
  return "-";
}

std::string_view status_name(RestoreStatus s) {
  switch (s) {
    case RestoreStatus::Data: return "Data";
    case RestoreStatus::Unmapped: return "Unmapped";
    case RestoreStatus::Lost: return "Lost";
  }
  return "?";
}

const OpLabel* label_for(const GroundTruth* truth, Seq seq) {
  if (!truth) return nullptr;
  auto it = truth->find(seq);
  return it == truth->end() ? nullptr : &it->second;
}

}  // namespace

void write_chain_text(std::ostream& out, const VersionChain& chain) {
  for (const auto& v : chain.entries) {
    out << "version " << chain.lpa << ' ' << v.seq << ' ' << v.timestamp << ' ' << to_string(v.kind) << ' '
        << to_string(v.location) << ' ' << location_detail(v) << '\n';
  }
}

void write_chain_json(std::ostream& out, const VersionChain& chain) {
  for (const auto& v : chain.entries) {
    json j{{"type", "version"}, {"lpa", chain.lpa}, {"seq", v.seq}, {"timestamp", v.timestamp},
           {"kind", to_string(v.kind)}, {"location", to_string(v.location)}};
    if (v.kind == VersionKind::Write) j["digest"] = to_hex(v.digest);
    if (v.location == Location::Local) j["ppa"] = nand::to_string(v.ppa);
    if (v.location == Location::Remote) {
      j["segment_id"] = v.segment_id;
      j["record_index"] = v.record_index;
    }
    out << j.dump() << '\n';
  }
  out << json{{"type", "summary"}, {"lpa", chain.lpa}, {"versions", chain.entries.size()},
              {"complete", chain.complete()}}.dump()
      << '\n';
}

void write_restore_text(std::ostream& out, const std::vector<RestoredPage>& pages) {
  for (const auto& p : pages) {
    out << "restore " << p.lpa << ' ' << status_name(p.status) << ' ' << p.seq << ' ' << to_string(p.source)
        << ' ' << (p.status == RestoreStatus::Data ? to_hex(sha256(p.data)) : "-") << '\n';
  }
}

void write_restore_json(std::ostream& out, const std::vector<RestoredPage>& pages) {
  std::size_t lost = 0;
  for (const auto& p : pages) {
    json j{{"type", "restore"}, {"lpa", p.lpa}, {"status", status_name(p.status)}, {"seq", p.seq},
           {"source", to_string(p.source)}};
    if (p.status == RestoreStatus::Data) j["sha256"] = to_hex(sha256(p.data));
    lost += p.status == RestoreStatus::Lost;
    out << j.dump() << '\n';
  }
  out << json{{"type", "summary"}, {"pages", pages.size()}, {"lost", lost}}.dump() << '\n';
}

void write_evidence_text(std::ostream& out, const EvidenceChain& chain, const GroundTruth* truth) {
  out << "# evidence chain\n";
  out << "window " << chain.lo << ' ' << chain.hi << '\n';
  if (chain.tamper_at) {
    out << "status TAMPERED " << *chain.tamper_at << '\n';
    return;
  }
  out << "status VERIFIED\n";
  if (chain.replay.ok) {
    out << "replay OK " << chain.replay.lpas_checked << '\n';
  } else {
    out << "replay MISMATCH " << chain.replay.first_mismatch.value_or(0) << ' ' << chain.replay.detail << '\n';
  }
  for (const auto& e : chain.entries) {
    out << "entry " << e.seq << ' ' << e.timestamp << ' ' << oplog::to_string(e.kind) << ' ';
    if (e.lpa_range) {
      out << e.lpa_range->start << '+' << e.lpa_range->length;
    } else {
      out << '-';
    }
    out << ' ' << (e.payload_digest ? to_hex(*e.payload_digest) : "-");
    const OpLabel* label = label_for(truth, e.seq);
    out << ' ' << (label ? label->label : "-") << ' ' << (label ? label->phase : "-") << '\n';
  }
}

void write_evidence_json(std::ostream& out, const EvidenceChain& chain, const GroundTruth* truth) {
  std::size_t attack_ops = 0;
  for (const auto& e : chain.entries) {
    json j{{"type", "entry"}, {"seq", e.seq}, {"timestamp", e.timestamp}, {"kind", oplog::to_string(e.kind)},
           {"chain_hash", to_hex(e.chain_hash)}};
    if (e.lpa_range) {
      j["lpa"] = e.lpa_range->start;
      j["length"] = e.lpa_range->length;
    }
    if (e.payload_digest) j["digest"] = to_hex(*e.payload_digest);
    if (const OpLabel* label = label_for(truth, e.seq)) {
      j["label"] = label->label;
      j["phase"] = label->phase;
      attack_ops += label->label == "attack";
    }
    out << j.dump() << '\n';
  }
  json summary{{"type", "summary"}, {"lo", chain.lo}, {"hi", chain.hi}, {"verified", chain.verified},
               {"entries", chain.entries.size()}, {"replay_ok", chain.replay.ok},
               {"lpas_checked", chain.replay.lpas_checked}, {"attack_ops", attack_ops}};
  if (chain.tamper_at) summary["tamper_at"] = *chain.tamper_at;
  if (chain.replay.first_mismatch) summary["replay_mismatch_lpa"] = *chain.replay.first_mismatch;
  out << summary.dump() << '\n';
}

}  // namespace rssd::recovery
