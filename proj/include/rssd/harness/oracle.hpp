#pragma once

#include <limits>
#include <map>
#include <set>
#include <unordered_map>
#include <vector>

#include "rssd/common/types.hpp"

namespace rssd::harness {

enum class OracleKind : std::uint8_t { Write, Trim };

struct OracleEvent {
  Seq seq = 0;
  SimTime timestamp = 0;
  OracleKind kind = OracleKind::Write;
  Digest digest{};  // Write only
  Bytes bytes;      // Write only, full-bytes mode only
};

/// What an lpa held at some point in time.
struct OracleAnswer {
  bool mapped = false;
  Seq seq = 0;  // seq of the deciding event, 0 if none
  Digest digest{};
  const Bytes* bytes = nullptr;  // full-bytes mode only
};

inline constexpr Seq kAnySeq = std::numeric_limits<Seq>::max();

/// Test-only full-history store used as ground truth. A trim of an lpa
/// that is not mapped leaves no event, matching the device's bookkeeping.
class ShadowOracle {
 public:
  enum class Mode { FullBytes, DigestOnly };

  explicit ShadowOracle(Mode mode = Mode::FullBytes) : mode_(mode) {}

  Mode mode() const { return mode_; }
  void record_write(Lpa lpa, Seq seq, SimTime timestamp, ByteView data);
  void record_trim(Lpa start, std::uint64_t count, Seq seq, SimTime timestamp);

  OracleAnswer current(Lpa lpa) const;
  /// Latest event with timestamp <= time and seq <= max_seq.
  OracleAnswer as_of(Lpa lpa, SimTime time, Seq max_seq = kAnySeq) const;
  const std::vector<OracleEvent>& history(Lpa lpa) const;

  std::vector<Lpa> mapped_lpas() const { return {mapped_.begin(), mapped_.end()}; }
  std::vector<Lpa> touched_lpas() const;
  bool is_mapped(Lpa lpa) const { return mapped_.count(lpa) != 0; }
  std::size_t mapped_count() const { return mapped_.size(); }
  std::uint64_t write_count() const { return writes_; }

 private:
  Mode mode_;
  std::unordered_map<Lpa, std::vector<OracleEvent>> history_;
  std::set<Lpa> mapped_;
  std::uint64_t writes_ = 0;
};

}  // namespace rssd::harness
