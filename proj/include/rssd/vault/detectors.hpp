#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>

#include "rssd/oplog/log_entry.hpp"
#include "rssd/vault/query.hpp"

namespace rssd::vault {

/// Input to a detection hook: every verified entry from genesis through
/// the end of the window, so hooks can rebuild mapping state; only
/// entries with lo <= seq <= hi are in the window.
struct DetectorInput {
  std::span<const oplog::LogEntry> history;
  Seq lo = 0;
  Seq hi = 0;
};

using DetectionHook = std::function<DetectionReport(const DetectorInput&)>;

struct BurstParams {
  std::size_t min_lpas = 32;
  SimTime window = 10 * kNanosPerSecond;
};

/// Demonstration hook: flags >= min_lpas distinct lpas whose mapped
/// content was destroyed (overwritten or trimmed) within `window`.
/// Evidence lists the destroying seqs inside every qualifying window.
DetectionReport detect_overwrite_burst(const DetectorInput& input, BurstParams params = {});

/// Demonstration hook: flags trims of lpas that were overwritten no more
/// than `window` earlier, when at least min_lpas such lpas occur.
DetectionReport detect_trim_after_overwrite(const DetectorInput& input, BurstParams params = {8, 60 * kNanosPerSecond});

/// Registry pre-populated with "overwrite-burst" and "trim-after-overwrite".
std::map<std::string, DetectionHook> builtin_detectors();

}  // namespace rssd::vault
