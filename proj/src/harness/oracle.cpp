#include "rssd/harness/oracle.hpp"

#include <algorithm>

#include "rssd/common/crypto.hpp"

namespace rssd::harness {

namespace {
const std::vector<OracleEvent> kEmpty;
}

void ShadowOracle::record_write(Lpa lpa, Seq seq, SimTime timestamp, ByteView data) {
  OracleEvent e;
  e.seq = seq;
  e.timestamp = timestamp;
  e.kind = OracleKind::Write;
  e.digest = sha256(data);
  if (mode_ == Mode::FullBytes) e.bytes.assign(data.begin(), data.end());
  history_[lpa].push_back(std::move(e));
  mapped_.insert(lpa);
  ++writes_;
}

void ShadowOracle::record_trim(Lpa start, std::uint64_t count, Seq seq, SimTime timestamp) {
  auto first = mapped_.lower_bound(start);
  auto last = mapped_.lower_bound(start + count);
  for (auto it = first; it != last; ++it) {
    history_[*it].push_back(OracleEvent{seq, timestamp, OracleKind::Trim, {}, {}});
  }
  mapped_.erase(first, last);
}

namespace {

OracleAnswer answer_for(const OracleEvent& e) {
  OracleAnswer a;
  a.seq = e.seq;
  if (e.kind == OracleKind::Write) {
    a.mapped = true;
    a.digest = e.digest;
    if (!e.bytes.empty()) a.bytes = &e.bytes;
  }
  return a;
}

}  // namespace

OracleAnswer ShadowOracle::current(Lpa lpa) const {
  const auto& h = history(lpa);
  if (h.empty()) return {};
  return answer_for(h.back());
}

OracleAnswer ShadowOracle::as_of(Lpa lpa, SimTime time, Seq max_seq) const {
  const auto& h = history(lpa);
  // Timestamps and seqs both ascend along a history.
  auto it = std::upper_bound(h.begin(), h.end(), std::make_pair(time, max_seq),
                             [](const std::pair<SimTime, Seq>& key, const OracleEvent& e) {
                               return key.first < e.timestamp || key.second < e.seq;
                             });
  if (it == h.begin()) return {};
  return answer_for(*std::prev(it));
}

const std::vector<OracleEvent>& ShadowOracle::history(Lpa lpa) const {
  auto it = history_.find(lpa);
  return it == history_.end() ? kEmpty : it->second;
}

std::vector<Lpa> ShadowOracle::touched_lpas() const {
  std::vector<Lpa> out;
  out.reserve(history_.size());
  for (const auto& [lpa, h] : history_) out.push_back(lpa);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rssd::harness
