#include "rssd/cli/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "rssd/common/error.hpp"
#include "rssd/harness/prng.hpp"
#include "rssd/offload/tcp_transport.hpp"
#include "rssd/recovery/report.hpp"
#include "rssd/vault/client.hpp"
#include "rssd/vault/store.hpp"
#include "rssd/vault/transports.hpp"

namespace rssd::cli {

namespace fs = std::filesystem;
using harness::IssuedOp;
using harness::Label;
using harness::ShadowOracle;
using harness::TraceOpKind;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  f << text;
  if (!f) throw Error(Errc::StorageFailure, "cannot write " + path.string());
}

/// Device plus the configured vault, wired for one run.
struct Rig {
  std::unique_ptr<device::Device> device;
  std::unique_ptr<vault::VaultStore> store;
  std::unique_ptr<offload::VaultTransport> transport;
  std::unique_ptr<vault::VaultClient> client;
  vault::VaultQuery* query = nullptr;

  explicit Rig(const RunConfig& cfg) {
    auto dc = cfg.device_config();
    dc.key = cfg.device_key();
    device = std::make_unique<device::Device>(dc);
    switch (cfg.vault_mode()) {
      case VaultMode::Local: {
        fs::path dir = cfg.out_dir() / "vault";
        if (fs::exists(dir) && !fs::is_empty(dir)) {
          throw Error(Errc::ConfigError, "output directory " + cfg.out + " already holds a vault; use a fresh one");
        }
        store = std::make_unique<vault::VaultStore>(vault::VaultOptions{dir, dc.key, cfg.vault_fsync});
        transport = std::make_unique<vault::InProcessTransport>(*store);
        query = store.get();
        break;
      }
      case VaultMode::Remote: {
        auto endpoint = cfg.vault_endpoint();
        client = std::make_unique<vault::VaultClient>(endpoint);
        if (client->status().last_segment_id != 0) {
          throw Error(Errc::ConfigError, "vault at " + cfg.vault + " already holds segments; start a fresh one");
        }
        transport = std::make_unique<offload::TcpTransport>(endpoint);
        query = client.get();
        break;
      }
      case VaultMode::Disabled:
        break;
    }
    device->attach_vault(transport.get());
  }

  std::uint64_t vault_bytes() const { return query ? query->status().stored_bytes : 0; }
};

/// Validates, creates the output directory and archives the config.
void begin_run(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir());
  cfg.save(cfg.out_dir() / "config.txt");
}

harness::Trace workload(const RunConfig& cfg, std::uint64_t logical, SimTime start) {
  if (!cfg.trace.empty()) return harness::load_trace(cfg.trace);
  auto params = cfg.benign_params(logical);
  params.start = start;
  return harness::generate_benign(params);
}

ThroughputPoint sample(device::Device& dev, std::uint64_t records) {
  ThroughputPoint p;
  p.records = records;
  p.sim_time = dev.ftl().now();
  auto s = dev.ftl().stats();
  p.host_writes = s.host_writes;
  p.host_reads = s.host_reads;
  p.host_trims = s.host_trims;
  p.counters = dev.counters();
  return p;
}

void write_throughput_csv(const fs::path& path, const std::vector<ThroughputPoint>& points) {
  std::ostringstream out;
  out << "records,sim_seconds,host_page_writes,host_page_reads,host_trims,flash_reads,flash_programs,"
         "log_pages,flash_erases,busy_seconds,pages_per_busy_second\n";
  for (const auto& p : points) {
    out << p.records << ',' << fixed(static_cast<double>(p.sim_time) / kNanosPerSecond, 3) << ','
        << p.host_writes << ',' << p.host_reads << ',' << p.host_trims << ',' << p.counters.flash_reads << ','
        << p.counters.flash_programs << ',' << p.counters.log_pages << ',' << p.counters.flash_erases << ','
        << fixed(static_cast<double>(p.counters.busy_time) / kNanosPerSecond) << ','
        << fixed(p.pages_per_busy_second(), 3) << '\n';
  }
  write_text(path, out.str());
}

bool matches_oracle(const recovery::RestoredPage& page, const harness::OracleAnswer& expected) {
  if (!expected.mapped) return page.status == recovery::RestoreStatus::Unmapped;
  if (page.status != recovery::RestoreStatus::Data) return false;
  if (expected.bytes) return page.data == *expected.bytes;
  return sha256(page.data) == expected.digest;
}

/// Restores `lpa` as of `at` and compares it with the oracle. Restore
/// errors count as a mismatch.
bool restore_matches(recovery::Recovery& rec, const ShadowOracle& oracle, Lpa lpa, recovery::AsOf at,
                     recovery::RestoredPage* out = nullptr) {
  try {
    auto page = rec.restore_one(lpa, at);
    bool ok = matches_oracle(page, oracle.as_of(lpa, at.time, at.max_seq));
    if (out) *out = std::move(page);
    return ok;
  } catch (const Error&) {
    if (out) {
      out->lpa = lpa;
      out->status = recovery::RestoreStatus::Lost;
    }
    return false;
  }
}

std::string op_name(TraceOpKind kind) {
  switch (kind) {
    case TraceOpKind::Write: return "write";
    case TraceOpKind::Trim: return "trim";
    case TraceOpKind::Read: return "read";
  }
  return "?";
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

double ThroughputPoint::pages_per_busy_second() const {
  if (counters.busy_time == 0) return 0.0;
  return static_cast<double>(host_writes + host_reads) * kNanosPerSecond / static_cast<double>(counters.busy_time);
}

bool SimulateResult::ok() const {
  return retention_mismatches == 0 && invariant_violations.empty() && run.read_mismatches == 0;
}

void write_ground_truth(const fs::path& path, const std::vector<IssuedOp>& ops) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << "index,seq,timestamp_ns,op,lpa,length,label,phase,rejected\n";
  for (const auto& op : ops) {
    out << op.index << ',' << op.seq << ',' << op.timestamp << ',' << op_name(op.kind) << ',' << op.lpa << ','
        << op.length << ',' << harness::to_string(op.label) << ',' << op.phase << ',' << (op.rejected ? 1 : 0)
        << '\n';
  }
  if (!out) throw Error(Errc::StorageFailure, "cannot write " + path.string());
}

LoadedTruth load_ground_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open " + path.string());
  LoadedTruth truth;
  std::string line;
  std::getline(in, line);  // header
  std::uint64_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 9) throw Error(Errc::ConfigError, path.string() + ": malformed line", number);
    Seq seq = std::stoull(f[1]);
    if (seq == 0 || f[3] == "read") continue;
    truth.labels[seq] = recovery::OpLabel{f[6], f[7]};
    truth.order.push_back(seq);
  }
  return truth;
}

SimulateResult run_simulate(const RunConfig& cfg, std::ostream& log) {
  Stopwatch clock;
  begin_run(cfg);
  Rig rig(cfg);
  auto& dev = *rig.device;
  ShadowOracle oracle(ShadowOracle::Mode::DigestOnly);
  harness::Harness h(dev, oracle);
  recovery::Recovery rec(dev, rig.query);
  auto trace = workload(cfg, dev.logical_pages(), kNanosPerSecond);

  SimulateResult result;
  result.retention_checked = cfg.retention;
  harness::Prng prng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  auto check_retention = [&] {
    const auto& issued = h.ground_truth();
    if (!cfg.retention || issued.empty()) return;
    // A random earlier instant, pinned to the seq of a logged command.
    for (std::size_t i = prng.below(issued.size()); i < issued.size(); ++i) {
      if (issued[i].seq == 0) continue;
      recovery::AsOf at{issued[i].timestamp, issued[i].seq};
      for (Lpa lpa : prng.sample(oracle.touched_lpas(), 16)) {
        ++result.retention_checks;
        if (!restore_matches(rec, oracle, lpa, at)) ++result.retention_mismatches;
      }
      break;
    }
  };
  auto check_invariants = [&] {
    for (auto& v : dev.ftl().check_invariants()) result.invariant_violations.push_back(std::move(v));
  };

  auto checkpoint = [&](std::size_t records) {
    result.points.push_back(sample(dev, records));
    check_retention();
    check_invariants();
    log << "simulate: " << records << "/" << trace.size() << " records\n";
  };
  result.run = h.replay_trace(trace, cfg.speed, checkpoint, cfg.checkpoint_every);
  dev.sync_offload();
  result.final = sample(dev, trace.size());
  if (result.points.empty() || result.points.back().records != trace.size()) result.points.push_back(result.final);
  check_retention();
  check_invariants();
  result.wall_seconds = clock.seconds();

  write_throughput_csv(cfg.out_dir() / "throughput.csv", result.points);
  write_ground_truth(cfg.out_dir() / "ground_truth.csv", h.ground_truth());

  auto stats = dev.ftl().stats();
  const auto& c = result.final.counters;
  std::ostringstream s;
  s << "command: simulate\n"
    << "records: " << result.run.ops << "\n"
    << "page_writes: " << result.run.page_writes << "\n"
    << "page_reads: " << result.run.page_reads << "\n"
    << "trims: " << result.run.trims << "\n"
    << "rejected_writes: " << result.run.rejected_writes << "\n"
    << "read_mismatches: " << result.run.read_mismatches << "\n"
    << "flash_reads: " << c.flash_reads << "\n"
    << "flash_programs: " << c.flash_programs << "\n"
    << "log_pages: " << c.log_pages << "\n"
    << "flash_erases: " << c.flash_erases << "\n"
    << "gc_blocks_erased: " << stats.gc_blocks_erased << "\n"
    << "gc_pages_moved: " << stats.gc_pages_moved << "\n"
    << "busy_seconds: " << fixed(static_cast<double>(c.busy_time) / kNanosPerSecond) << "\n"
    << "throughput_pages_per_busy_second: " << fixed(result.throughput(), 3) << "\n";
  if (auto* engine = dev.engine()) {
    auto os = engine->stats();
    s << "segments_acked: " << os.segments_acked << "\n"
      << "pages_offloaded: " << os.pages_acked << "\n";
  }
  s << "vault_bytes: " << rig.vault_bytes() << "\n"
    << "retention_checks: " << result.retention_checks << "\n"
    << "retention_mismatches: " << result.retention_mismatches << "\n"
    << "invariant_violations: " << result.invariant_violations.size() << "\n";
  for (const auto& v : result.invariant_violations) s << "violation: " << v << "\n";
  if (!cfg.retention) {
    s << "retention: disabled\n";
  } else {
    s << "retention: " << (result.ok() ? "OK" : "VIOLATED") << "\n";
  }
  write_text(cfg.out_dir() / "summary.txt", s.str());
  write_text(cfg.out_dir() / "wall.txt", "simulate_seconds: " + fixed(result.wall_seconds, 3) + "\n");
  return result;
}

AttackResult run_attack(const RunConfig& cfg, std::ostream& log) {
  Stopwatch clock;
  begin_run(cfg);
  auto kind = cfg.attack_kind();
  Rig rig(cfg);
  auto& dev = *rig.device;
  ShadowOracle oracle(ShadowOracle::Mode::FullBytes);
  harness::Harness h(dev, oracle);
  std::uint64_t logical = dev.logical_pages();

  auto prefill = static_cast<std::uint64_t>(std::floor(cfg.prefill * static_cast<double>(logical)));
  h.replay_trace(harness::generate_fill(prefill, kNanosPerSecond, 1000.0, cfg.seed));
  log << "attack: prefilled " << prefill << " lpas\n";

  harness::Trace benign;
  if (kind == harness::AttackKind::TimingAttack) benign = workload(cfg, logical, h.now() + kNanosPerSecond);

  AttackResult result;
  auto erases_before = dev.ftl().stats().gc_blocks_erased;
  result.run = harness::run_attack(h, kind, cfg.attack_params(), benign);
  dev.sync_offload();
  dev.force_gc();
  result.gc_erases = dev.ftl().stats().gc_blocks_erased - erases_before;
  log << "attack: " << harness::to_string(kind) << " done, " << result.run.victims.size() << " victims, "
      << result.gc_erases << " GC erases\n";

  Stopwatch restore_clock;
  recovery::Recovery rec(dev, rig.query);
  recovery::AsOf at{result.run.pre_attack_time, result.run.pre_attack_seq};
  std::set<Lpa> victims(result.run.victims.begin(), result.run.victims.end());
  std::vector<recovery::RestoredPage> victim_pages;
  for (Lpa lpa = 0; lpa < logical; ++lpa) {
    recovery::RestoredPage page;
    bool ok = restore_matches(rec, oracle, lpa, at, &page);
    if (victims.count(lpa)) {
      if (ok) {
        ++result.recovered;
      } else {
        result.lost.push_back(lpa);
      }
      victim_pages.push_back(std::move(page));
    } else if (!ok) {
      ++result.other_mismatches;
    }
  }
  result.victims = victims.size();
  result.restore_seconds = restore_clock.seconds();

  if (result.recovered_all()) {
    result.verdict = "RECOVERED(100%)";
  } else {
    std::ostringstream v;
    v << "LOST " << result.lost.size() << " of " << result.victims << " victim lpas:";
    for (Lpa l : result.lost) v << ' ' << l;
    if (result.other_mismatches) v << " (+" << result.other_mismatches << " other lpas differ)";
    result.verdict = v.str();
  }
  result.wall_seconds = clock.seconds();

  std::ostringstream restore_text;
  recovery::write_restore_text(restore_text, victim_pages);
  write_text(cfg.out_dir() / "restore.txt", restore_text.str());
  write_ground_truth(cfg.out_dir() / "ground_truth.csv", h.ground_truth());

  std::ostringstream s;
  s << "command: attack\n"
    << "attack: " << harness::to_string(kind) << "\n"
    << "retention: " << (cfg.retention ? "on" : "off") << "\n"
    << "prefilled_lpas: " << prefill << "\n"
    << "victims: " << result.victims << "\n"
    << "attack_writes: " << result.run.attack_writes << "\n"
    << "attack_trims: " << result.run.attack_trims << "\n"
    << "rejected_writes: " << result.run.rejected_writes << "\n"
    << "gc_erases: " << result.gc_erases << "\n"
    << "pre_attack_seq: " << result.run.pre_attack_seq << "\n"
    << "pre_attack_time_ns: " << result.run.pre_attack_time << "\n"
    << "recovered_victims: " << result.recovered << "\n"
    << "other_mismatches: " << result.other_mismatches << "\n"
    << "vault_bytes: " << rig.vault_bytes() << "\n"
    << "verdict: " << result.verdict << "\n";
  write_text(cfg.out_dir() / "attack_report.txt", s.str());
  write_text(cfg.out_dir() / "summary.txt", s.str());
  write_text(cfg.out_dir() / "wall.txt", "attack_seconds: " + fixed(result.wall_seconds, 3) +
                                             "\nrestore_seconds: " + fixed(result.restore_seconds, 3) + "\n");
  return result;
}

RetentionResult run_retention(const RunConfig& cfg, std::ostream& log) {
  Stopwatch clock;
  begin_run(cfg);
  Rig rig(cfg);
  auto& dev = *rig.device;
  ShadowOracle oracle(ShadowOracle::Mode::DigestOnly);
  harness::Harness h(dev, oracle);
  recovery::Recovery rec(dev, rig.query);
  std::uint64_t logical = dev.logical_pages();
  harness::Prng prng(cfg.seed);

  // Day 0: every lpa written once within the first half day.
  double fill_rate = std::max(1.0, static_cast<double>(logical) / 43200.0);
  h.replay_trace(harness::generate_fill(logical, kNanosPerSecond, fill_rate, cfg.seed));

  std::vector<Lpa> all(logical);
  for (Lpa l = 0; l < logical; ++l) all[l] = l;
  auto checked = cfg.verify_lpas == 0 ? all : prng.sample(all, cfg.verify_lpas);

  RetentionResult result;
  result.lpas_checked = checked.size();
  std::vector<recovery::AsOf> snapshots{{h.now(), h.last_seq()}};
  std::size_t oldest = 0;  // oldest snapshot still fully restorable
  auto restorable = [&](const recovery::AsOf& at) {
    return std::all_of(checked.begin(), checked.end(),
                       [&](Lpa lpa) { return restore_matches(rec, oracle, lpa, at); });
  };

  std::ostringstream csv;
  csv << "day,oldest_restorable_age_days,local_retained_pages,vault_bytes,rejected_writes\n";
  auto per_day = static_cast<std::uint64_t>(std::ceil(cfg.daily_writes * static_cast<double>(logical)));
  for (std::uint64_t day = 1; day <= cfg.days; ++day) {
    harness::Trace trace;
    trace.reserve(per_day);
    for (std::uint64_t i = 0; i < per_day; ++i) {
      SimTime ts = day * kNanosPerDay + i * (kNanosPerDay / std::max<std::uint64_t>(per_day, 1));
      trace.push_back(harness::TraceOp{ts, TraceOpKind::Write, prng.below(logical), 1, prng.next() >> 16});
    }
    h.replay_trace(trace);
    snapshots.push_back({h.now(), h.last_seq()});
    while (oldest + 1 < snapshots.size() && !restorable(snapshots[oldest])) ++oldest;

    RetentionDay row;
    row.day = day;
    row.oldest_restorable_age = day - oldest;
    auto counts = dev.ftl().page_counts();
    row.local_retained_pages = counts.retained + counts.pending;
    row.vault_bytes = rig.vault_bytes();
    row.rejected_writes = h.rejected_writes();
    result.unbounded = result.unbounded && row.oldest_restorable_age == day;
    result.days.push_back(row);
    csv << row.day << ',' << row.oldest_restorable_age << ',' << row.local_retained_pages << ','
        << row.vault_bytes << ',' << row.rejected_writes << '\n';
    if (day % 10 == 0 || day == cfg.days) {
      log << "retention: day " << day << ", oldest restorable age " << row.oldest_restorable_age << "\n";
    }
  }
  result.wall_seconds = clock.seconds();
  write_text(cfg.out_dir() / "retention.csv", csv.str());
  write_ground_truth(cfg.out_dir() / "ground_truth.csv", h.ground_truth());

  std::ostringstream s;
  s << "command: retention\n"
    << "days: " << cfg.days << "\n"
    << "logical_pages: " << logical << "\n"
    << "writes_per_day: " << per_day << "\n"
    << "lpas_checked: " << result.lpas_checked << "\n"
    << "rejected_writes: " << h.rejected_writes() << "\n"
    << "vault_bytes: " << rig.vault_bytes() << "\n";
  if (rig.query == nullptr) {
    std::uint64_t peak = 0;
    for (const auto& d : result.days) peak = std::max(peak, d.local_retained_pages);
    s << "retention: capped by local capacity (" << peak << " retained pages, " << h.rejected_writes()
      << " writes refused)\n";
  } else {
    s << "retention: " << (result.unbounded ? "OK" : "VIOLATED") << "\n";
  }
  write_text(cfg.out_dir() / "summary.txt", s.str());
  write_text(cfg.out_dir() / "wall.txt", "retention_seconds: " + fixed(result.wall_seconds, 3) + "\n");
  return result;
}

ForensicsResult run_forensics(const ForensicsOptions& options, std::ostream& report) {
  RunConfig cfg;
  fs::path config_path = options.run_dir / "config.txt";
  if (fs::exists(config_path)) cfg.apply_file(config_path);

  std::string spec = options.vault;
  if (spec.empty()) {
    switch (cfg.vault_mode()) {
      case VaultMode::Local: spec = (options.run_dir / "vault").string(); break;
      case VaultMode::Remote: spec = cfg.vault; break;
      case VaultMode::Disabled: throw Error(Errc::ConfigError, "the run had no vault; pass --vault");
    }
  }

  std::unique_ptr<vault::VaultStore> store;
  std::unique_ptr<vault::VaultClient> client;
  vault::VaultQuery* query = nullptr;
  if (fs::is_directory(spec)) {
    store = std::make_unique<vault::VaultStore>(vault::VaultOptions{spec, DeviceKey{}, false});
    query = store.get();
  } else if (spec.find(':') != std::string::npos) {
    client = std::make_unique<vault::VaultClient>(net::Endpoint::parse(spec));
    query = client.get();
  } else {
    throw Error(Errc::ConfigError, "vault " + spec + " is neither a directory nor host:port");
  }

  ForensicsResult result;
  Seq hi = options.hi;
  if (hi == 0) {
    auto status = query->status();
    hi = status.last_seq;
    if (hi == 0) {
      if (status.damaged_segment == 0) throw Error(Errc::OutOfRange, "the vault holds no log entries");
      hi = options.lo;  // the audit still walks the damaged file and reports it
    }
  }
  result.chain = recovery::verify_vault_window(*query, options.lo, hi);

  LoadedTruth truth;
  fs::path truth_path = options.run_dir / "ground_truth.csv";
  if (result.chain.verified && fs::exists(truth_path)) {
    truth = load_ground_truth(truth_path);
    result.have_truth = true;
    std::vector<Seq> logged, issued;
    for (const auto& e : result.chain.entries) {
      if (e.kind == oplog::EntryKind::Write || e.kind == oplog::EntryKind::Trim) logged.push_back(e.seq);
      auto it = truth.labels.find(e.seq);
      if (it != truth.labels.end() && it->second.label == "attack") ++result.attack_ops;
    }
    for (Seq s : truth.order) {
      if (s >= options.lo && s <= hi) issued.push_back(s);
    }
    result.truth_ops = issued.size();
    for (std::size_t i = 0; i < std::min(logged.size(), issued.size()); ++i) {
      result.order_matches += logged[i] == issued[i];
    }
    result.order_exact = logged == issued;
  }

  const recovery::GroundTruth* labels = result.have_truth ? &truth.labels : nullptr;
  if (options.json) {
    recovery::write_evidence_json(report, result.chain, labels);
  } else {
    recovery::write_evidence_text(report, result.chain, labels);
  }
  if (result.have_truth) {
    std::ostringstream order;
    if (options.json) {
      order << R"({"type":"order","exact":)" << (result.order_exact ? "true" : "false")
            << R"(,"matches":)" << result.order_matches << R"(,"ground_truth_ops":)" << result.truth_ops
            << R"(,"attack_ops":)" << result.attack_ops << "}\n";
    } else {
      order << "order " << (result.order_exact ? "EXACT " : "MISMATCH ") << result.order_matches << '/'
            << result.truth_ops << "\nattack_ops " << result.attack_ops << '\n';
    }
    report << order.str();
  }
  return result;
}

}  // namespace rssd::cli
