#include "rssd/vault/detectors.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <unordered_map>

namespace rssd::vault {

namespace {

struct Destruction {
  SimTime timestamp;
  Lpa lpa;
  Seq seq;
};

/// Replays the history and calls `on_destroy` for every mapped lpa that an
/// in-window Write or Trim destroys.
template <typename F>
void replay_destructions(const DetectorInput& input, F&& on_destroy) {
  std::set<Lpa> mapped;
  for (const auto& e : input.history) {
    if (e.seq > input.hi) break;
    if (!e.lpa_range) continue;
    bool in_window = e.seq >= input.lo;
    if (e.kind == oplog::EntryKind::Write) {
      Lpa lpa = e.lpa_range->start;
      bool was_mapped = !mapped.insert(lpa).second;
      if (was_mapped && in_window) on_destroy(e, lpa);
    } else if (e.kind == oplog::EntryKind::Trim) {
      auto first = mapped.lower_bound(e.lpa_range->start);
      auto last = mapped.lower_bound(e.lpa_range->start + e.lpa_range->length);
      if (in_window) {
        for (auto it = first; it != last; ++it) on_destroy(e, *it);
      }
      mapped.erase(first, last);
    }
  }
}

std::vector<Seq> unique_sorted(std::vector<Seq> seqs) {
  std::sort(seqs.begin(), seqs.end());
  seqs.erase(std::unique(seqs.begin(), seqs.end()), seqs.end());
  return seqs;
}

}  // namespace

DetectionReport detect_overwrite_burst(const DetectorInput& input, BurstParams params) {
  std::vector<Destruction> events;
  replay_destructions(input, [&](const oplog::LogEntry& e, Lpa lpa) {
    events.push_back(Destruction{e.timestamp, lpa, e.seq});
  });

  std::unordered_map<Lpa, std::size_t> in_window;
  std::size_t begin = 0;
  std::ptrdiff_t marked_until = -1;
  std::vector<Seq> evidence;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    ++in_window[events[i].lpa];
    while (events[i].timestamp - events[begin].timestamp > params.window) {
      auto it = in_window.find(events[begin].lpa);
      if (--it->second == 0) in_window.erase(it);
      ++begin;
    }
    peak = std::max(peak, in_window.size());
    if (in_window.size() >= params.min_lpas) {
      auto from = std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(begin), marked_until + 1);
      for (auto j = from; j <= static_cast<std::ptrdiff_t>(i); ++j) evidence.push_back(events[j].seq);
      marked_until = static_cast<std::ptrdiff_t>(i);
    }
  }

  DetectionReport report;
  report.detector = "overwrite-burst";
  report.evidence = unique_sorted(std::move(evidence));
  report.suspicious = !report.evidence.empty();
  report.summary = std::to_string(events.size()) + " destructive ops in window, peak " +
                   std::to_string(peak) + " distinct lpas within " +
                   std::to_string(params.window / kNanosPerSecond) + "s (threshold " +
                   std::to_string(params.min_lpas) + ")";
  return report;
}

DetectionReport detect_trim_after_overwrite(const DetectorInput& input, BurstParams params) {
  std::unordered_map<Lpa, SimTime> last_overwrite;
  std::set<Lpa> flagged;
  std::vector<Seq> evidence;
  replay_destructions(input, [&](const oplog::LogEntry& e, Lpa lpa) {
    if (e.kind == oplog::EntryKind::Write) {
      last_overwrite[lpa] = e.timestamp;
      return;
    }
    auto it = last_overwrite.find(lpa);
    if (it != last_overwrite.end() && e.timestamp - it->second <= params.window) {
      flagged.insert(lpa);
      evidence.push_back(e.seq);
    }
  });

  DetectionReport report;
  report.detector = "trim-after-overwrite";
  report.suspicious = flagged.size() >= params.min_lpas;
  if (report.suspicious) report.evidence = unique_sorted(std::move(evidence));
  report.summary = std::to_string(flagged.size()) + " lpas trimmed within " +
                   std::to_string(params.window / kNanosPerSecond) + "s of an overwrite (threshold " +
                   std::to_string(params.min_lpas) + ")";
  return report;
}

std::map<std::string, DetectionHook> builtin_detectors() {
  return {
      {"overwrite-burst", [](const DetectorInput& in) { return detect_overwrite_burst(in); }},
      {"trim-after-overwrite", [](const DetectorInput& in) { return detect_trim_after_overwrite(in); }},
  };
}

}  // namespace rssd::vault
