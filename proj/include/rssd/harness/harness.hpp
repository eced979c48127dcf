#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rssd/harness/oracle.hpp"
#include "rssd/harness/trace.hpp"
#include "rssd/host/host_interface.hpp"

namespace rssd::harness {

enum class Label : std::uint8_t { Benign, Attack };

std::string_view to_string(Label label);

/// One command as issued to the device, in issue order.
struct IssuedOp {
  std::uint64_t index = 0;
  Seq seq = 0;  // 0 for reads and rejected writes
  SimTime timestamp = 0;
  TraceOpKind kind = TraceOpKind::Write;
  Lpa lpa = 0;
  std::uint64_t length = 1;
  Label label = Label::Benign;
  std::string phase;
  bool rejected = false;

  bool operator==(const IssuedOp&) const = default;
};

struct RunReport {
  std::uint64_t ops = 0;
  std::uint64_t page_writes = 0;
  std::uint64_t trims = 0;
  std::uint64_t page_reads = 0;
  std::uint64_t rejected_writes = 0;
  std::uint64_t read_mismatches = 0;
  SimTime first_timestamp = 0;
  SimTime last_timestamp = 0;
};

/// Drives the device through the host command surface only, keeping the
/// shadow oracle in lockstep and recording the issued schedule.
class Harness {
 public:
  Harness(host::HostInterface& device, ShadowOracle& oracle);

  host::HostInterface& device() { return device_; }
  ShadowOracle& oracle() { return oracle_; }
  std::uint32_t page_size() const { return device_.page_size(); }
  std::uint64_t logical_pages() const { return device_.logical_pages(); }

  /// Time of the latest issued command.
  SimTime now() const { return now_; }
  Seq last_seq() const { return last_seq_; }

  /// Returns false if the device refused the write for lack of space.
  bool write(Lpa lpa, ByteView data, SimTime timestamp, Label label, std::string_view phase);
  void trim(Lpa start, std::uint64_t count, SimTime timestamp, Label label, std::string_view phase);
  /// Reads and checks the result against the oracle.
  std::optional<Bytes> read(Lpa lpa, SimTime timestamp, Label label, std::string_view phase);

  /// Issues one trace record (timestamp taken from the record).
  void issue(const TraceOp& op, Label label, std::string_view phase, SimTime timestamp);

  /// Replays a trace in order. Offsets from the first record are divided
  /// by speed_factor; a trace starting before now() is shifted to now(). `checkpoint` (if set) runs
  /// after every `checkpoint_every` records.
  RunReport replay_trace(const Trace& trace, double speed_factor = 1.0,
                         const std::function<void(std::size_t)>& checkpoint = {},
                         std::size_t checkpoint_every = 0);

  const std::vector<IssuedOp>& ground_truth() const { return issued_; }
  std::uint64_t read_mismatches() const { return read_mismatches_; }
  std::uint64_t rejected_writes() const { return rejected_writes_; }

 private:
  SimTime clamp(SimTime timestamp);
  void record(IssuedOp op);

  host::HostInterface& device_;
  ShadowOracle& oracle_;
  std::vector<IssuedOp> issued_;
  SimTime now_ = 0;
  Seq last_seq_ = 0;
  std::uint64_t read_mismatches_ = 0;
  std::uint64_t rejected_writes_ = 0;
  std::uint64_t accepted_writes_ = 0;
};

}  // namespace rssd::harness
