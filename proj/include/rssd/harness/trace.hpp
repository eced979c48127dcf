#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "rssd/common/types.hpp"

namespace rssd::harness {

enum class TraceOpKind : char { Write = 'W', Trim = 'T', Read = 'R' };

/// One trace record:  timestamp_ns op lpa length_pages payload_seed
/// Blank lines and lines starting with '#' are ignored. Timestamps must be
/// non-decreasing. A Write of n pages writes lpa..lpa+n-1 with payload
/// seeds payload_seed..payload_seed+n-1.
struct TraceOp {
  SimTime timestamp = 0;
  TraceOpKind kind = TraceOpKind::Write;
  Lpa lpa = 0;
  std::uint64_t length = 1;
  std::uint64_t payload_seed = 0;

  bool operator==(const TraceOp&) const = default;
};

using Trace = std::vector<TraceOp>;

/// Throws Error(TraceParseError) with the 1-based line number as detail.
Trace parse_trace(std::istream& in);
Trace load_trace(const std::filesystem::path& path);
void write_trace(std::ostream& out, const Trace& trace);
void save_trace(const std::filesystem::path& path, const Trace& trace);

struct BenignParams {
  std::uint64_t ops = 1000;
  std::uint64_t lpa_space = 1024;  // lpas used: [0, lpa_space)
  double read_fraction = 0.30;
  double trim_fraction = 0.03;
  double hot_fraction = 0.6;       // share of writes aimed at the hot set
  std::uint64_t hot_lpas = 16;
  std::uint64_t max_length = 4;
  double ops_per_second = 4.0;
  SimTime start = kNanosPerSecond;
  std::uint64_t seed = 1;
};

/// Synthetic benign workload: a small hot set that is rewritten often,
/// cold writes spread over the rest of the space, occasional trims of
/// written ranges, and reads.
Trace generate_benign(const BenignParams& params);

/// Writes every lpa of [0, lpa_count) once, in order, ops_per_second apart.
Trace generate_fill(std::uint64_t lpa_count, SimTime start, double ops_per_second, std::uint64_t seed);

}  // namespace rssd::harness
