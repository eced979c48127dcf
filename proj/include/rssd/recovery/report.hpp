#pragma once

#include <iosfwd>
#include <vector>

#include "rssd/recovery/recovery.hpp"

namespace rssd::recovery {

// Line-oriented text reports. Each record is one line of space-separated
// fields; lines starting with '#' are comments.
//
//   version <lpa> <seq> <timestamp> <Write|Trim> <location> <detail>
//       detail: ppa=c/c/b/p, segment=<id>/<index>, or -
//   restore <lpa> <Data|Unmapped|Lost> <seq> <source> <sha256|->
//   window <lo> <hi>
//   status VERIFIED | TAMPERED <seq>
//   replay OK <lpas> | MISMATCH <lpa> <reason...>
//   entry <seq> <timestamp> <kind> <lpa_start>+<length>|- <digest|-> <label|-> <phase|->
//
// The structured format is JSON lines: one object per version, restored
// page or log entry, plus one "summary" object per report.

void write_chain_text(std::ostream& out, const VersionChain& chain);
void write_chain_json(std::ostream& out, const VersionChain& chain);

void write_restore_text(std::ostream& out, const std::vector<RestoredPage>& pages);
void write_restore_json(std::ostream& out, const std::vector<RestoredPage>& pages);

void write_evidence_text(std::ostream& out, const EvidenceChain& chain, const GroundTruth* truth = nullptr);
void write_evidence_json(std::ostream& out, const EvidenceChain& chain, const GroundTruth* truth = nullptr);

}  // namespace rssd::recovery
