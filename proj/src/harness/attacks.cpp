#include "rssd/harness/attacks.hpp"

#include <cmath>

#include "rssd/common/error.hpp"
#include "rssd/harness/prng.hpp"

namespace rssd::harness {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::GcAttack: return "gc";
    case AttackKind::TimingAttack: return "timing";
    case AttackKind::TrimmingAttack: return "trimming";
  }
  return "unknown";
}

std::optional<AttackKind> parse_attack(std::string_view name) {
  if (name == "gc") return AttackKind::GcAttack;
  if (name == "timing") return AttackKind::TimingAttack;
  if (name == "trimming") return AttackKind::TrimmingAttack;
  return std::nullopt;
}

std::vector<IssuedOp> AttackRun::schedule(const Harness& harness) const {
  const auto& all = harness.ground_truth();
  return {all.begin() + static_cast<std::ptrdiff_t>(first_op), all.begin() + static_cast<std::ptrdiff_t>(end_op)};
}

std::vector<Lpa> choose_victims(const ShadowOracle& oracle, double fraction, std::uint64_t seed) {
  auto mapped = oracle.mapped_lpas();
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(mapped.size())));
  Prng prng(seed ^ 0x5bd1e995ULL);
  return prng.sample(mapped, k);
}

namespace {

AttackRun begin_run(Harness& h, AttackKind kind, const AttackParams& params) {
  if (!(params.victim_fraction >= 0.0 && params.victim_fraction <= 1.0)) {
    throw Error(Errc::ConfigError, "victim_fraction must be in [0, 1]");
  }
  if (!(params.write_rate_pages_per_s > 0.0)) throw Error(Errc::ConfigError, "write rate must be > 0");
  AttackRun run;
  run.kind = kind;
  run.params = params;
  run.pre_attack_time = h.now();
  run.pre_attack_seq = h.last_seq();
  run.first_op = h.ground_truth().size();
  run.victims = choose_victims(h.oracle(), params.victim_fraction, params.seed);
  return run;
}

void end_run(Harness& h, AttackRun& run) {
  run.end_op = h.ground_truth().size();
  run.end_time = h.now();
  for (std::size_t i = run.first_op; i < run.end_op; ++i) {
    const auto& op = h.ground_truth()[i];
    if (op.label != Label::Attack) continue;
    if (op.kind == TraceOpKind::Write) {
      op.rejected ? ++run.rejected_writes : ++run.attack_writes;
    } else if (op.kind == TraceOpKind::Trim) {
      ++run.attack_trims;
    }
  }
}

SimTime interval_of(double per_second) {
  return static_cast<SimTime>(std::llround(static_cast<double>(kNanosPerSecond) / per_second));
}

}  // namespace

AttackRun gc_attack(Harness& h, const AttackParams& params) {
  if (!(params.fill_fraction >= 0.0 && params.fill_fraction <= 1.0)) {
    throw Error(Errc::ConfigError, "fill_fraction must be in [0, 1]");
  }
  AttackRun run = begin_run(h, AttackKind::GcAttack, params);
  Prng prng(params.seed);
  SimTime step = std::max<SimTime>(1, interval_of(params.write_rate_pages_per_s));
  SimTime t = h.now() + kNanosPerSecond;
  std::uint32_t ps = h.page_size();

  for (Lpa v : run.victims) {
    h.write(v, ransom_payload(prng, ps), t, Label::Attack, "encrypt");
    t += step;
  }

  if (params.fill_fraction > 0.0) {
    auto capacity = h.logical_pages();
    auto target = static_cast<std::uint64_t>(std::ceil(params.fill_fraction * static_cast<double>(capacity)));
    std::vector<Lpa> flood;
    for (Lpa lpa = 0; lpa < capacity && h.oracle().mapped_count() < target; ++lpa) {
      if (h.oracle().is_mapped(lpa)) continue;
      if (h.write(lpa, ransom_payload(prng, ps), t, Label::Attack, "flood")) flood.push_back(lpa);
      t += step;
    }
    if (flood.empty()) flood = run.victims;
    std::uint64_t pressure = params.pressure_pages ? params.pressure_pages : capacity / 2;
    for (std::uint64_t i = 0; i < pressure && !flood.empty(); ++i) {
      Lpa lpa = flood[prng.below(flood.size())];
      h.write(lpa, ransom_payload(prng, ps), t, Label::Attack, "pressure");
      t += step;
    }
  }
  end_run(h, run);
  return run;
}

AttackRun timing_attack(Harness& h, const AttackParams& params, const Trace& benign) {
  if (params.ops_per_minute < 0.0) throw Error(Errc::ConfigError, "ops_per_minute must be >= 0");
  AttackParams p = params;
  if (p.ops_per_minute == 0.0) p.victim_fraction = 0.0;
  AttackRun run = begin_run(h, AttackKind::TimingAttack, p);
  Prng prng(params.seed);
  std::uint32_t ps = h.page_size();
  SimTime t0 = h.now() + kNanosPerSecond;
  SimTime origin = benign.empty() ? 0 : benign.front().timestamp;
  SimTime interval = p.ops_per_minute > 0.0 ? interval_of(p.ops_per_minute / 60.0) : 0;

  std::size_t b = 0, a = 0;
  while (b < benign.size() || a < run.victims.size()) {
    SimTime tb = b < benign.size() ? t0 + (benign[b].timestamp - origin) : ~SimTime{0};
    SimTime ta = a < run.victims.size() ? t0 + interval * (a + 1) : ~SimTime{0};
    if (tb <= ta) {
      h.issue(benign[b], Label::Benign, "benign", tb);
      ++b;
    } else {
      Lpa v = run.victims[a];
      h.read(v, ta, Label::Attack, "read");
      h.write(v, ransom_payload(prng, ps), ta, Label::Attack, "encrypt");
      ++a;
    }
  }
  end_run(h, run);
  return run;
}

AttackRun trimming_attack(Harness& h, const AttackParams& params) {
  AttackRun run = begin_run(h, AttackKind::TrimmingAttack, params);
  Prng prng(params.seed);
  SimTime step = std::max<SimTime>(1, interval_of(params.write_rate_pages_per_s));
  SimTime t = h.now() + kNanosPerSecond;
  std::uint32_t ps = h.page_size();
  Lpa cursor = 0;
  auto capacity = h.logical_pages();

  for (Lpa v : run.victims) {
    h.read(v, t, Label::Attack, "read");
    t += step;
    Lpa target = v;
    if (!params.in_place) {
      while (cursor < capacity && h.oracle().is_mapped(cursor)) ++cursor;
      if (cursor < capacity) target = cursor++;
    }
    h.write(target, ransom_payload(prng, ps), t, Label::Attack, target == v ? "encrypt" : "copy");
    t += step;
    h.trim(v, 1, t, Label::Attack, "trim");
    t += step;
  }
  end_run(h, run);
  return run;
}

AttackRun run_attack(Harness& h, AttackKind kind, const AttackParams& params, const Trace& benign) {
  switch (kind) {
    case AttackKind::GcAttack: return gc_attack(h, params);
    case AttackKind::TimingAttack: return timing_attack(h, params, benign);
    case AttackKind::TrimmingAttack: return trimming_attack(h, params);
  }
  throw Error(Errc::Internal, "unknown attack kind");
}

}  // namespace rssd::harness
