#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "rssd/harness/harness.hpp"

namespace rssd::harness {

enum class AttackKind : std::uint8_t { GcAttack, TimingAttack, TrimmingAttack };

std::string_view to_string(AttackKind kind);
/// Accepts "gc", "timing" and "trimming".
std::optional<AttackKind> parse_attack(std::string_view name);

struct AttackParams {
  double victim_fraction = 0.25;
  double fill_fraction = 0.95;           // gc: occupied share of logical capacity
  double write_rate_pages_per_s = 200.0;
  std::uint64_t pressure_pages = 0;      // gc: overwrites after the flood; 0 = half the capacity
  double ops_per_minute = 10.0;          // timing
  bool in_place = false;                 // trimming: overwrite victims instead of copying
  std::uint64_t seed = 7;
};

struct AttackRun {
  AttackKind kind = AttackKind::GcAttack;
  AttackParams params;
  std::vector<Lpa> victims;  // ascending
  SimTime pre_attack_time = 0;
  Seq pre_attack_seq = 0;
  SimTime end_time = 0;
  /// Slice [first_op, end_op) of the harness ground truth issued by the run.
  std::size_t first_op = 0;
  std::size_t end_op = 0;
  std::uint64_t attack_writes = 0;
  std::uint64_t attack_trims = 0;
  std::uint64_t rejected_writes = 0;

  std::vector<IssuedOp> schedule(const Harness& harness) const;
};

/// victim_fraction of the currently mapped lpas, uniformly by seed.
std::vector<Lpa> choose_victims(const ShadowOracle& oracle, double fraction, std::uint64_t seed);

/// Encrypt-overwrites the victims, floods fresh lpas until fill_fraction
/// of the logical capacity is occupied, then keeps overwriting flood pages
/// to sustain GC pressure. fill_fraction 0 stops after the encryption.
AttackRun gc_attack(Harness& harness, const AttackParams& params);

/// Interleaves encrypt-overwrites of the victims, one every
/// 60/ops_per_minute seconds, with a replay of `benign`. A rate of 0 is a
/// pure benign replay.
AttackRun timing_attack(Harness& harness, const AttackParams& params, const Trace& benign);

/// Per victim: read it, write an encrypted copy to a fresh lpa (or over
/// the victim when in_place or no fresh lpa is left), then trim it.
AttackRun trimming_attack(Harness& harness, const AttackParams& params);

AttackRun run_attack(Harness& harness, AttackKind kind, const AttackParams& params, const Trace& benign);

}  // namespace rssd::harness
