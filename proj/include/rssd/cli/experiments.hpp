#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rssd/cli/run_config.hpp"
#include "rssd/harness/attacks.hpp"
#include "rssd/recovery/recovery.hpp"

namespace rssd::cli {

// Every run writes into cfg.out:
//   config.txt         the validated RunConfig
//   summary.txt        deterministic key: value lines
//   ground_truth.csv   every issued command with its seq and label
//   wall.txt           wall-clock timings (the only non-deterministic file)
//   vault/             segment files of a local vault
// plus the experiment's own CSV or report. Progress lines go to `log`.

struct ThroughputPoint {
  std::uint64_t records = 0;
  SimTime sim_time = 0;
  std::uint64_t host_writes = 0;
  std::uint64_t host_reads = 0;
  std::uint64_t host_trims = 0;
  device::DeviceCounters counters;

  /// Host pages served per second of simulated flash busy time.
  double pages_per_busy_second() const;
};

struct SimulateResult {
  harness::RunReport run;
  std::vector<ThroughputPoint> points;
  ThroughputPoint final;
  std::uint64_t retention_checks = 0;
  std::uint64_t retention_mismatches = 0;
  std::vector<std::string> invariant_violations;
  bool retention_checked = false;
  double wall_seconds = 0;

  bool ok() const;
  double throughput() const { return final.pages_per_busy_second(); }
};

/// Replays the configured trace (or a generated benign one), sampling
/// throughput and checking point-in-time restores against the oracle
/// every checkpoint_every records. Writes throughput.csv.
SimulateResult run_simulate(const RunConfig& cfg, std::ostream& log);

struct AttackResult {
  harness::AttackRun run;
  std::uint64_t victims = 0;
  std::uint64_t recovered = 0;
  std::vector<Lpa> lost;  // victims not restored byte-exact
  std::uint64_t other_mismatches = 0;  // non-victim lpas differing from the snapshot
  std::uint64_t gc_erases = 0;         // during the attack and the closing forced GC
  std::string verdict;
  double wall_seconds = 0;
  double restore_seconds = 0;

  bool recovered_all() const { return lost.empty() && other_mismatches == 0; }
};

/// Prefills, runs the named attack, forces GC, restores the whole
/// pre-attack snapshot and compares it byte for byte with the oracle.
/// Writes attack_report.txt and restore.txt.
AttackResult run_attack(const RunConfig& cfg, std::ostream& log);

struct RetentionDay {
  std::uint64_t day = 0;
  std::uint64_t oldest_restorable_age = 0;  // days
  std::uint64_t local_retained_pages = 0;
  std::uint64_t vault_bytes = 0;
  std::uint64_t rejected_writes = 0;
};

struct RetentionResult {
  std::vector<RetentionDay> days;
  std::uint64_t lpas_checked = 0;
  bool unbounded = true;  // oldest_restorable_age == day on every day
  double wall_seconds = 0;
};

/// Writes every lpa once on day 0, then daily_writes x capacity random
/// overwrites per day, checking each day which end-of-day snapshot is the
/// oldest one still fully restorable. Writes retention.csv.
RetentionResult run_retention(const RunConfig& cfg, std::ostream& log);

struct ForensicsOptions {
  std::filesystem::path run_dir;
  std::string vault;  // overrides the run's vault (directory or host:port)
  Seq lo = 1;
  Seq hi = 0;  // 0: the vault's last seq
  bool json = false;
};

struct ForensicsResult {
  recovery::EvidenceChain chain;
  bool have_truth = false;
  std::uint64_t truth_ops = 0;      // ground-truth commands in the window
  std::uint64_t order_matches = 0;  // positions agreeing with the issue order
  std::uint64_t attack_ops = 0;     // entries labelled attack
  bool order_exact = false;

  bool ok() const { return chain.verified && chain.replay.ok && (!have_truth || order_exact); }
};

/// Verifies the run's offloaded log from genesis, replays the window and
/// compares its order with ground_truth.csv when present. Writes the
/// evidence report to `report`.
ForensicsResult run_forensics(const ForensicsOptions& options, std::ostream& report);

/// Loads ground_truth.csv: (seq -> label) plus the seqs in issue order.
struct LoadedTruth {
  recovery::GroundTruth labels;
  std::vector<Seq> order;
};
LoadedTruth load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const std::vector<harness::IssuedOp>& ops);

}  // namespace rssd::cli
