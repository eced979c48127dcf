#include "rssd/harness/harness.hpp"

#include <cmath>

#include "rssd/common/crypto.hpp"
#include "rssd/common/error.hpp"
#include "rssd/harness/prng.hpp"

namespace rssd::harness {

std::string_view to_string(Label label) { return label == Label::Attack ? "attack" : "benign"; }

Harness::Harness(host::HostInterface& device, ShadowOracle& oracle) : device_(device), oracle_(oracle) {}

SimTime Harness::clamp(SimTime timestamp) {
  now_ = std::max(now_, timestamp);
  return now_;
}

void Harness::record(IssuedOp op) {
  op.index = issued_.size();
  issued_.push_back(std::move(op));
}

bool Harness::write(Lpa lpa, ByteView data, SimTime timestamp, Label label, std::string_view phase) {
  SimTime ts = clamp(timestamp);
  IssuedOp op{0, 0, ts, TraceOpKind::Write, lpa, 1, label, std::string(phase), false};
  try {
    op.seq = device_.write(lpa, data, ts);
  } catch (const Error& e) {
    if (e.code() != Errc::CapacityExhausted) throw;
    op.rejected = true;
    ++rejected_writes_;
    record(std::move(op));
    return false;
  }
  last_seq_ = op.seq;
  ++accepted_writes_;
  oracle_.record_write(lpa, op.seq, ts, data);
  record(std::move(op));
  return true;
}

void Harness::trim(Lpa start, std::uint64_t count, SimTime timestamp, Label label, std::string_view phase) {
  SimTime ts = clamp(timestamp);
  IssuedOp op{0, 0, ts, TraceOpKind::Trim, start, count, label, std::string(phase), false};
  op.seq = device_.trim(start, count, ts);
  last_seq_ = op.seq;
  oracle_.record_trim(start, count, op.seq, ts);
  record(std::move(op));
}

std::optional<Bytes> Harness::read(Lpa lpa, SimTime timestamp, Label label, std::string_view phase) {
  SimTime ts = clamp(timestamp);
  auto data = device_.read(lpa, ts);
  auto expected = oracle_.current(lpa);
  bool match = data ? (expected.mapped && sha256(*data) == expected.digest) : !expected.mapped;
  if (!match) ++read_mismatches_;
  record(IssuedOp{0, 0, ts, TraceOpKind::Read, lpa, 1, label, std::string(phase), false});
  return data;
}

void Harness::issue(const TraceOp& op, Label label, std::string_view phase, SimTime timestamp) {
  std::uint64_t capacity = device_.logical_pages();
  if (op.lpa >= capacity || op.length > capacity - op.lpa) {
    throw Error(Errc::OutOfRange, "trace op touches lpa beyond logical capacity " + std::to_string(capacity));
  }
  switch (op.kind) {
    case TraceOpKind::Write:
      for (std::uint64_t k = 0; k < op.length; ++k) {
        write(op.lpa + k, benign_payload(op.payload_seed + k, page_size()), timestamp, label, phase);
      }
      break;
    case TraceOpKind::Trim:
      trim(op.lpa, op.length, timestamp, label, phase);
      break;
    case TraceOpKind::Read:
      for (std::uint64_t k = 0; k < op.length; ++k) read(op.lpa + k, timestamp, label, phase);
      break;
  }
}

RunReport Harness::replay_trace(const Trace& trace, double speed_factor,
                                const std::function<void(std::size_t)>& checkpoint,
                                std::size_t checkpoint_every) {
  if (!(speed_factor > 0.0)) throw Error(Errc::ConfigError, "speed_factor must be > 0");
  RunReport report;
  if (trace.empty()) return report;
  std::uint64_t writes_before = accepted_writes_, rejected_before = rejected_writes_,
                mismatches_before = read_mismatches_;
  SimTime origin = trace.front().timestamp;
  // A trace that starts after the current clock keeps its own timeline.
  SimTime base = std::max(origin, now_);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& op = trace[i];
    auto offset = static_cast<SimTime>(std::llround(static_cast<double>(op.timestamp - origin) / speed_factor));
    SimTime ts = base + offset;
    if (i == 0) report.first_timestamp = ts;
    issue(op, Label::Benign, "benign", ts);
    ++report.ops;
    if (op.kind == TraceOpKind::Trim) ++report.trims;
    if (op.kind == TraceOpKind::Read) report.page_reads += op.length;
    report.last_timestamp = now_;
    if (checkpoint && checkpoint_every > 0 && (i + 1) % checkpoint_every == 0) checkpoint(i + 1);
  }
  report.page_writes = accepted_writes_ - writes_before;
  report.rejected_writes = rejected_writes_ - rejected_before;
  report.read_mismatches = read_mismatches_ - mismatches_before;
  return report;
}

}  // namespace rssd::harness
