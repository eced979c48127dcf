// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Details are printed indented above each verdict line.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "rssd/cli/experiments.hpp"
#include "rssd/common/codec.hpp"
#include "rssd/common/error.hpp"
#include "rssd/harness/attacks.hpp"
#include "rssd/harness/prng.hpp"
#include "rssd/offload/segment.hpp"
#include "rssd/recovery/recovery.hpp"
#include "rssd/vault/client.hpp"
#include "rssd/vault/store.hpp"
#include "rssd/vault/transports.hpp"
#include "segment_gen.hpp"
#include "support.hpp"

#ifndef RSSD_CLI_PATH
#error "RSSD_CLI_PATH must name the rssd executable"
#endif

using namespace rssd;
namespace fs = std::filesystem;
using harness::Prng;
using harness::ShadowOracle;
using testing::TempDir;

namespace {

int failures = 0;

void verdict(int number, bool pass, const std::string& title, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << number << ": " << title << " -- " << detail
            << std::endl;
  if (!pass) ++failures;
}

void note(const std::string& line) { std::cout << "  " << line << std::endl; }

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

DeviceKey key_a() { return DeviceKey::from_hex(std::string(64, '7')); }
DeviceKey key_b() { return DeviceKey::from_hex(std::string(64, 'b')); }

device::DeviceConfig small_device(nand::Geometry g, DeviceKey key = key_a()) {
  device::DeviceConfig c;
  c.ftl.geometry = g;
  c.key = key;
  c.offload.max_pages = 32;
  c.seal.max_entries = 64;
  return c;
}

Bytes read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_all(const fs::path& p, const Bytes& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

/// Desk-scale run configuration writing into `dir`.
cli::RunConfig desk(const fs::path& dir) {
  cli::RunConfig cfg;
  cfg.out = dir.string();
  cfg.seed = 11;
  return cfg;
}

/// Device wired to an in-process vault, with a shadow oracle and harness.
struct Bench {
  TempDir dir;
  vault::VaultStore store;
  vault::InProcessTransport transport{store};
  device::Device device;
  ShadowOracle oracle{ShadowOracle::Mode::DigestOnly};
  harness::Harness harness{device, oracle};

  explicit Bench(device::DeviceConfig cfg)
      : store(vault::VaultOptions{dir.path() / "vault", cfg.key, false}), device(cfg) {
    device.attach_vault(&transport);
  }
};

// Criterion 1 and 2 share the attack runs.
std::map<std::string, cli::AttackResult> attack_runs;
std::vector<fs::path> finished_runs;

void criterion_1(const fs::path& root) {
  struct Case {
    std::string name, attack;
    double rate;
  };
  std::vector<Case> cases{{"gc", "gc", 10}, {"timing-1", "timing", 1}, {"timing-100", "timing", 100},
                          {"trimming", "trimming", 10}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    auto cfg = desk(root / ("attack-" + c.name));
    cfg.attack = c.attack;
    cfg.attack_rate = c.rate;
    std::ostringstream log;
    auto r = cli::run_attack(cfg, log);
    attack_runs[c.name] = r;
    finished_runs.push_back(cfg.out_dir());
    bool ok = r.victims > 0 && r.recovered_all() && r.wall_seconds <= 60.0 &&
              (c.attack != "gc" || r.gc_erases >= 10);
    pass = pass && ok;
    note(c.name + ": " + std::to_string(r.recovered) + "/" + std::to_string(r.victims) + " victims restored, " +
         std::to_string(r.other_mismatches) + " other mismatches, " + std::to_string(r.gc_erases) +
         " GC erases, " + fmt(r.wall_seconds) + " s, verdict " + r.verdict.substr(0, 60));
    detail += c.name + " " + (ok ? "ok" : "FAILED") + "; ";
  }
  verdict(1, pass, "zero data loss under gc, timing (1 and 100 ops/min) and trimming attacks at 128 MiB", detail);
}

void criterion_2(const fs::path& root) {
  bool pass = true;
  std::string detail;
  for (std::string attack : {"gc", "trimming"}) {
    auto cfg = desk(root / ("ablation-" + attack));
    cfg.attack = attack;
    cfg.retention = false;
    std::ostringstream log;
    auto r = cli::run_attack(cfg, log);
    bool ok = !r.lost.empty();
    pass = pass && ok;
    note(attack + " with retention off: " + std::to_string(r.lost.size()) + " of " + std::to_string(r.victims) +
         " victims unrecoverable");
    detail += attack + " lost " + std::to_string(r.lost.size()) + "; ";
  }
  verdict(2, pass, "with retention disabled the gc and trimming attacks destroy victim data", detail);
}

void criterion_3(const fs::path& root) {
  cli::RunConfig cfg;
  cfg.geometry = nand::Geometry{1, 1, 32, 16, 512};
  cfg.days = 200;
  cfg.daily_writes = 2.0;
  cfg.out = (root / "retention").string();
  std::ostringstream log;
  auto r = cli::run_retention(cfg, log);
  bool rows = r.days.size() == 200 && r.days.back().oldest_restorable_age == 200;
  bool pass = r.unbounded && rows && r.wall_seconds <= 600.0;
  std::uint64_t logical = cfg.device_config().ftl.logical_pages();
  note(std::to_string(logical) + " logical pages, " + std::to_string(static_cast<std::uint64_t>(2.0 * logical)) +
       " page writes per day, " + std::to_string(r.lpas_checked) + " lpas checked daily");
  if (!r.days.empty()) {
    const auto& last = r.days.back();
    note("day " + std::to_string(last.day) + ": oldest restorable age " + std::to_string(last.oldest_restorable_age) +
         " days, vault " + std::to_string(last.vault_bytes) + " bytes, " + fmt(r.wall_seconds) + " s");
  }
  verdict(3, pass, "every day-0 version restorable after 200 simulated days",
          "oldest restorable age == day on all " + std::to_string(r.days.size()) + " days: " +
              (r.unbounded ? "yes" : "no"));
}

cli::SimulateResult overhead_on, overhead_off;

void criterion_4(const fs::path& root) {
  auto on = desk(root / "overhead-on");
  on.ops = 100000;
  auto off = on;
  off.out = (root / "overhead-off").string();
  off.retention = false;
  off.logging = false;
  std::ostringstream log;
  overhead_on = cli::run_simulate(on, log);
  overhead_off = cli::run_simulate(off, log);
  finished_runs.push_back(on.out_dir());
  double t_on = overhead_on.throughput(), t_off = overhead_off.throughput();
  double delta = t_off > 0 ? (t_off - t_on) / t_off : 1.0;
  note("throughput (host pages per simulated busy second): on " + fmt(t_on, 1) + ", off " + fmt(t_off, 1));
  note("wall time: on " + fmt(overhead_on.wall_seconds) + " s, off " + fmt(overhead_off.wall_seconds) + " s");
  bool pass = overhead_on.ok() && delta <= 0.10;
  verdict(4, pass, "logging and retention throughput overhead at desk scale <= 10%",
          "measured delta " + fmt(100.0 * delta) + "%");
}

/// Attribution oracle for one stored segment file, from the documented
/// layout: the seq a single damaged byte at `offset` must be reported at.
struct FileLayout {
  Seq file_first = 0;
  struct Span {
    std::size_t begin, end;
    Seq seq;
  };
  std::vector<Span> spans;  // everything not listed maps to file_first

  explicit FileLayout(const Bytes& b) {
    ByteReader r(b);
    r.raw(5);
    r.u8();
    r.u64();
    r.digest();
    std::uint32_t page_size = r.u32();
    std::uint32_t logs = r.u32();
    for (std::uint32_t i = 0; i < logs; ++i) {
      std::size_t at = r.position();
      r.u64();
      Seq first = r.u64();
      if (i == 0) file_first = first;
      r.u64();
      r.digest();
      r.digest();
      std::size_t count_at = r.position();
      std::uint32_t count = r.u32();
      spans.push_back({at, count_at, first});  // id, first, last, head, tail
      for (std::uint32_t k = 0; k < count; ++k) {
        std::size_t e = r.position();
        r.raw(oplog::kEntryWireSize);
        spans.push_back({e, e + oplog::kEntryWireSize, first + k});
      }
    }
    std::uint32_t records = r.u32();
    for (std::uint32_t k = 0; k < records; ++k) {
      Seq write_seq = r.u64();
      r.u64();
      r.u64();
      std::size_t d = r.position();
      r.raw(page_size);
      spans.push_back({d, d + page_size, write_seq});
    }
  }

  Seq expected(std::size_t offset) const {
    for (const auto& s : spans) {
      if (offset >= s.begin && offset < s.end) return s.seq;
    }
    return file_first;
  }
};

void criterion_5(const fs::path&) {
  // (a) forensics over finished runs.
  bool a = true;
  for (const auto& run : finished_runs) {
    std::ostringstream report;
    cli::ForensicsOptions opts;
    opts.run_dir = run;
    auto r = cli::run_forensics(opts, report);
    a = a && r.ok() && r.have_truth;
    note("forensics " + run.filename().string() + ": " + (r.chain.verified ? "VERIFIED" : "NOT VERIFIED") +
         " seqs 1.." + std::to_string(r.chain.hi) + ", order " + std::to_string(r.order_matches) + "/" +
         std::to_string(r.truth_ops) + ", " + std::to_string(r.attack_ops) + " attack ops");
  }

  // A vault with GC and offload history, plus a vault-less device whose
  // sealed segments stay resident.
  Bench bench(small_device({1, 1, 32, 16, 64}));
  harness::BenignParams bp;
  bp.ops = 4000;
  bp.lpa_space = bench.device.logical_pages();
  bp.seed = 5;
  bench.harness.replay_trace(harness::generate_benign(bp));
  bench.device.sync_offload();

  // (b) single bit flips.
  Prng prng(99);
  auto& store = bench.store;
  auto ids = store.segment_ids();
  Seq last = store.status().last_seq;
  std::uint64_t file_trials = 0, file_hits = 0;
  for (int i = 0; i < 700; ++i) {
    auto id = ids[prng.below(ids.size())];
    auto path = store.segment_path(id);
    Bytes clean = read_all(path);
    FileLayout layout(clean);
    std::size_t off = prng.below(clean.size());
    Bytes bad = clean;
    bad[off] ^= static_cast<std::uint8_t>(1u << prng.below(8));
    write_all(path, bad);
    auto chain = recovery::verify_vault_window(store, 1, last);
    write_all(path, clean);
    ++file_trials;
    if (chain.tamper_at && *chain.tamper_at == layout.expected(off)) {
      ++file_hits;
    } else if (file_trials - file_hits <= 3) {
      note("miss: segment " + std::to_string(id) + " offset " + std::to_string(off) + " expected " +
           std::to_string(layout.expected(off)) + " got " +
           (chain.tamper_at ? std::to_string(*chain.tamper_at) : std::string("none")));
    }
  }
  bool clean_after = recovery::verify_vault_window(store, 1, last).verified;

  device::Device resident_dev(small_device({1, 1, 64, 16, 64}));
  ShadowOracle scratch(ShadowOracle::Mode::DigestOnly);
  harness::Harness rh(resident_dev, scratch);
  bp.ops = 1500;
  bp.lpa_space = 200;
  rh.replay_trace(harness::generate_benign(bp));
  auto sealed = resident_dev.log().sealed_after(0);
  Bytes raw;
  for (const auto& s : sealed) {
    for (const auto& e : s.entries) {
      auto w = oplog::encode_entry(e);
      raw.insert(raw.end(), w.begin(), w.end());
    }
  }
  std::uint64_t entry_trials = 0, entry_hits = 0;
  for (int i = 0; i < 700 && !raw.empty(); ++i) {
    std::size_t off = prng.below(raw.size());
    Bytes bad = raw;
    bad[off] ^= static_cast<std::uint8_t>(1u << prng.below(8));
    auto check = oplog::verify_raw_entries(bad, sealed.front().head_hash, sealed.front().first_seq);
    ++entry_trials;
    entry_hits += check.tamper_at == sealed.front().first_seq + off / oplog::kEntryWireSize;
  }
  bool b = file_hits == file_trials && entry_hits == entry_trials && entry_trials > 0 && clean_after;
  note("bit flips: vault files " + std::to_string(file_hits) + "/" + std::to_string(file_trials) +
       " attributed, sealed entries " + std::to_string(entry_hits) + "/" + std::to_string(entry_trials));

  // (c) replay soundness, checked against the shadow oracle.
  recovery::Recovery rec(bench.device, &store);
  Seq top = bench.device.log().last_seq();
  std::uint64_t windows_ok = 0;
  for (int i = 0; i < 100; ++i) {
    Seq lo = 1 + prng.below(top);
    Seq hi = lo + prng.below(std::min<Seq>(top - lo + 1, 3000));
    auto chain = rec.verify_window(lo, hi);
    bool ok = chain.verified && chain.replay.ok;
    std::map<Lpa, std::optional<Digest>> state;
    auto truth = [&](Lpa lpa, Seq s) -> std::optional<Digest> {
      auto ans = bench.oracle.as_of(lpa, ~SimTime{0}, s);
      return ans.mapped ? std::optional<Digest>(ans.digest) : std::nullopt;
    };
    for (const auto& e : chain.entries) {
      if (!e.lpa_range) continue;
      for (Lpa l = e.lpa_range->start; l < e.lpa_range->start + e.lpa_range->length; ++l) {
        if (!state.count(l)) state[l] = truth(l, lo - 1);
        if (e.kind == oplog::EntryKind::Write) state[l] = e.payload_digest;
        if (e.kind == oplog::EntryKind::Trim) state[l].reset();
      }
    }
    for (const auto& [lpa, s] : state) ok = ok && s == truth(lpa, hi);
    windows_ok += ok;
  }
  bool c = windows_ok == 100;
  note("replay windows sound: " + std::to_string(windows_ok) + "/100");
  verdict(5, a && b && c, "evidence chain verifies, localizes every bit flip, replays soundly",
          std::string("(a) ") + (a ? "ok" : "FAILED") + " (b) " + (b ? "ok" : "FAILED") + " (c) " +
              (c ? "ok" : "FAILED"));
}

void criterion_6(const fs::path&) {
  std::uint64_t exact = 0;
  const double rates[] = {1, 5, 20, 60, 100, 300};
  for (int i = 0; i < 50; ++i) {
    Bench bench(small_device({1, 1, 64, 16, 128}));
    Prng prng(1000 + i);
    auto& h = bench.harness;
    std::uint64_t logical = bench.device.logical_pages();
    h.replay_trace(harness::generate_fill(logical / 2, kNanosPerSecond, 100.0, i));
    harness::BenignParams bp;
    bp.ops = 300 + prng.below(300);
    bp.lpa_space = logical;
    bp.seed = 7 * i + 3;
    bp.ops_per_second = 0.5 + 4.0 * prng.unit();
    bp.start = h.now() + kNanosPerSecond;
    harness::AttackParams ap;
    ap.victim_fraction = 0.1 + 0.3 * prng.unit();
    ap.ops_per_minute = rates[prng.below(6)];
    ap.seed = 31 * i + 1;
    harness::timing_attack(h, ap, harness::generate_benign(bp));

    recovery::Recovery rec(bench.device, &bench.store);
    auto chain = rec.build_evidence_chain(1, bench.device.log().last_seq());
    std::vector<std::tuple<Seq, int, Lpa, std::uint64_t>> logged, issued;
    for (const auto& e : chain.entries) {
      if (e.kind == oplog::EntryKind::Write || e.kind == oplog::EntryKind::Trim) {
        logged.emplace_back(e.seq, e.kind == oplog::EntryKind::Write ? 0 : 1, e.lpa_range->start,
                            e.lpa_range->length);
      }
    }
    for (const auto& op : h.ground_truth()) {
      if (op.seq == 0) continue;
      issued.emplace_back(op.seq, op.kind == harness::TraceOpKind::Write ? 0 : 1, op.lpa, op.length);
    }
    exact += logged == issued && !issued.empty();
  }
  verdict(6, exact == 50, "evidence chain order equals the issue order for benign + timing interleavings",
          std::to_string(exact) + "/50 exact");
}

/// Records every frame the device sends while forwarding it to a scratch
/// vault, so a stream of genuine frames can be replayed elsewhere.
struct FrameStream {
  struct Recorder : offload::VaultTransport {
    offload::VaultTransport& inner;
    std::vector<Bytes> frames;
    explicit Recorder(offload::VaultTransport& t) : inner(t) {}
    offload::Reply send(ByteView frame) override {
      frames.emplace_back(frame.begin(), frame.end());
      return inner.send(frame);
    }
  };

  TempDir dir;
  vault::VaultStore scratch;
  vault::InProcessTransport inproc{scratch};
  Recorder recorder{inproc};
  device::Device device;

  FrameStream(device::DeviceConfig cfg, std::size_t count, std::uint64_t seed)
      : scratch(vault::VaultOptions{dir.path() / "scratch", cfg.key, false}), device(cfg) {
    device.attach_vault(&recorder);
    Prng prng(seed);
    SimTime t = kNanosPerSecond;
    auto logical = device.logical_pages();
    while (recorder.frames.size() < count) {
      Lpa base = prng.below(logical - 16);
      for (int pass = 0; pass < 2; ++pass) {
        for (Lpa l = base; l < base + 16; ++l) {
          device.write(l, harness::benign_payload(prng.next(), device.page_size()), t);
          t += kNanosPerSecond / 10;
        }
      }
      device.sync_offload();
    }
    recorder.frames.resize(count);
  }
};

bool same_state(vault::VaultStore& s, const vault::VaultStatus& before, const std::vector<std::string>& files) {
  auto now = s.status();
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(s.directory())) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return now.last_segment_id == before.last_segment_id && now.last_seq == before.last_seq &&
         now.last_tail_hash == before.last_tail_hash && now.stored_bytes == before.stored_bytes && names == files;
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

void criterion_7(const fs::path&) {
  std::mt19937_64 rng(2024);
  std::uint64_t identity = 0;
  for (int i = 0; i < 10000; ++i) {
    auto seg = testing::random_segment(rng, 1 + i);
    Bytes wire = offload::encode_segment(seg);
    auto back = offload::decode_segment(wire);
    auto frame = offload::encode_frame(seg, key_a(), i % 2 ? offload::Compression::Zlib : offload::Compression::None);
    identity += back == seg && offload::encode_segment(back) == wire && offload::decode_frame(frame, key_a()) == seg;
  }
  note("round trips: " + std::to_string(identity) + "/10000");

  FrameStream a(small_device({1, 1, 32, 16, 64}), 12, 1);
  FrameStream b(small_device({1, 1, 32, 16, 64}), 2, 2);
  FrameStream wrong(small_device({1, 1, 32, 16, 64}, key_b()), 3, 1);
  TempDir dir;
  vault::VaultStore store(vault::VaultOptions{dir.path() / "v", key_a(), false});
  for (int i = 0; i < 6; ++i) {
    if (store.ingest(a.recorder.frames[i]).kind != offload::Reply::Kind::Ack) note("setup ingest failed");
  }
  auto before = store.status();
  auto files = listing(store.directory());

  Prng prng(77);
  std::uint64_t flips = 0, flips_rejected = 0;
  for (int i = 0; i < 2000; ++i) {
    Bytes f = a.recorder.frames[prng.below(a.recorder.frames.size())];
    f[prng.below(f.size())] ^= static_cast<std::uint8_t>(1u << prng.below(8));
    ++flips;
    auto r = store.ingest(f);
    // A flip may hit an already stored frame; that must never be an Ack.
    flips_rejected += r.kind == offload::Reply::Kind::Nack && same_state(store, before, files);
  }
  std::uint64_t wrong_rejected = 0;
  for (const auto& f : wrong.recorder.frames) {
    auto r = store.ingest(f);
    wrong_rejected += r.kind == offload::Reply::Kind::Nack && r.reason == offload::NackReason::AuthFailed &&
                      same_state(store, before, files);
  }
  // Same ids as stored segments 1 and 2, different content.
  std::uint64_t reused_rejected = 0;
  for (const auto& f : b.recorder.frames) {
    auto r = store.ingest(f);
    reused_rejected += r.kind == offload::Reply::Kind::Nack && same_state(store, before, files);
  }
  auto ooo = store.ingest(a.recorder.frames[8]);
  bool ooo_ok = ooo.kind == offload::Reply::Kind::Nack && ooo.reason == offload::NackReason::OutOfOrder &&
                ooo.detail == 7 && same_state(store, before, files);
  auto dup = store.ingest(a.recorder.frames[3]);
  bool dup_ok = dup.kind == offload::Reply::Kind::Ack && dup.segment_id == 4 && same_state(store, before, files);
  note("flipped frames rejected " + std::to_string(flips_rejected) + "/" + std::to_string(flips) +
       ", wrong key " + std::to_string(wrong_rejected) + "/3, reused id " + std::to_string(reused_rejected) +
       "/2, out of order " + (ooo_ok ? "Nack(expected 7)" : "WRONG") + ", duplicate " + (dup_ok ? "Ack" : "WRONG"));
  bool pass = identity == 10000 && flips_rejected == flips && wrong_rejected == 3 && reused_rejected == 2 &&
              ooo_ok && dup_ok;
  verdict(7, pass, "wire protocol identity, rejection and ordering", pass ? "all checks hold" : "see above");
}

/// One vault-serve child process.
struct ServeProcess {
  pid_t pid = -1;
  net::Endpoint endpoint;

  ServeProcess(const fs::path& dir, const fs::path& key) {
    int out[2];
    if (pipe(out) != 0) throw Error(Errc::Internal, "pipe failed");
    pid = fork();
    if (pid == 0) {
      dup2(out[1], 1);
      int null = open("/dev/null", O_WRONLY);
      if (null >= 0) dup2(null, 2);
      close(out[0]);
      close(out[1]);
      execl(RSSD_CLI_PATH, RSSD_CLI_PATH, "vault-serve", "--dir", dir.c_str(), "--key-file", key.c_str(),
            "--listen", "127.0.0.1:0", "--fsync", "true", static_cast<char*>(nullptr));
      _exit(127);
    }
    close(out[1]);
    std::string line;
    char c;
    while (read(out[0], &c, 1) == 1 && c != '\n') line += c;
    close(out[0]);
    const std::string prefix = "listening on ";
    if (line.rfind(prefix, 0) != 0) throw Error(Errc::Internal, "vault-serve did not start: " + line);
    endpoint = net::Endpoint::parse(line.substr(prefix.size()));
  }

  void kill9() {
    ::kill(pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    pid = -1;
  }

  ~ServeProcess() {
    if (pid > 0) kill9();
  }
};

void criterion_8(const fs::path& root) {
  FrameStream stream(small_device({1, 1, 64, 32, 4096}), 420, 8);
  const auto& frames = stream.recorder.frames;
  fs::path dir = root / "durable-vault";
  fs::path key = root / "durable.key";
  key_a().save(key);

  Prng prng(808);
  std::uint64_t acked_max = 0;  // every segment up to here was acknowledged
  std::uint64_t lost_acked = 0, bad_audits = 0, during = 0, between = 0, inflight_kept = 0;
  auto server = std::make_unique<ServeProcess>(dir, key);
  for (int trial = 0; trial < 100; ++trial) {
    bool kill_during = trial % 2 == 1;
    std::uint64_t next = acked_max + 1;
    int acked_now = static_cast<int>(prng.between(1, 3));
    {
      auto sock = net::connect_to(server->endpoint, std::chrono::milliseconds(5000));
      if (!sock) throw Error(Errc::VaultUnreachable, "cannot reach vault-serve");
      net::set_io_timeout(*sock, std::chrono::milliseconds(10000));
      for (int k = 0; k < acked_now && next <= frames.size(); ++k, ++next) {
        net::send_message(*sock, frames[next - 1]);
        auto reply = net::recv_message(*sock);
        if (!reply) throw Error(Errc::VaultUnreachable, "no reply from vault-serve");
        auto r = offload::decode_reply(*reply);
        if (r.kind == offload::Reply::Kind::Ack) acked_max = std::max(acked_max, r.segment_id);
      }
      if (kill_during && next <= frames.size()) {
        net::send_message(*sock, frames[next - 1]);
        std::this_thread::sleep_for(std::chrono::microseconds(prng.below(4000)));
        ++during;
      } else {
        ++between;
      }
      server->kill9();
    }
    server = std::make_unique<ServeProcess>(dir, key);
    vault::VaultClient client(server->endpoint);
    auto status = client.status();
    if (status.last_segment_id < acked_max) ++lost_acked;
    if (status.damaged_segment != 0 || !client.audit_log(1, status.last_seq).ok()) ++bad_audits;
    if (status.last_segment_id > acked_max) {
      // The in-flight frame survived; it must be whole and re-ack as a duplicate.
      ++inflight_kept;
      acked_max = status.last_segment_id;
    }
  }
  server.reset();
  note(std::to_string(during) + " kills during ingest, " + std::to_string(between) + " between ingests; " +
       std::to_string(inflight_kept) + " in-flight segments persisted, " + std::to_string(acked_max) +
       " segments acknowledged in total");
  bool pass = lost_acked == 0 && bad_audits == 0 && acked_max > 100;
  verdict(8, pass, "vault survives kill -9 during and between ingests",
          std::to_string(lost_acked) + " acknowledged segments lost, " + std::to_string(bad_audits) +
              " damaged restarts over 100 trials");
}

void criterion_9(const fs::path&) {
  auto cfg = small_device({1, 2, 32, 16, 128});
  TempDir dir;
  vault::VaultStore store(vault::VaultOptions{dir.path() / "v", cfg.key, false});
  vault::InProcessTransport inproc(store);
  vault::FaultyTransport faulty(inproc, vault::FaultyTransport::Faults{false, 0.02, 0.02, 0.02, 9});

  // Independent record of what the device was told the vault holds.
  struct AckTap : offload::VaultTransport {
    offload::VaultTransport& inner;
    DeviceKey key;
    std::unordered_map<Seq, Digest> acked;
    AckTap(offload::VaultTransport& t, DeviceKey k) : inner(t), key(k) {}
    offload::Reply send(ByteView frame) override {
      auto r = inner.send(frame);
      if (r.kind == offload::Reply::Kind::Ack) {
        for (const auto& rec : offload::decode_frame(frame, key).page_records) acked[rec.write_seq] = sha256(rec.data);
      }
      return r;
    }
  } tap(faulty, cfg.key);

  device::Device dev(cfg);
  dev.attach_vault(&tap);
  std::uint64_t erased_pages = 0, violations = 0, erases = 0;
  auto& ftl = dev.ftl();
  const auto& geo = cfg.ftl.geometry;
  ftl.set_erase_observer([&](nand::BlockIndex block, std::span<const ftl::PageMeta> metas) {
    ++erases;
    for (std::uint32_t i = 0; i < metas.size(); ++i) {
      const auto& m = metas[i];
      if (m.lifecycle == ftl::PageLifecycle::Free) continue;
      ++erased_pages;
      nand::PageIndex page = geo.first_page(block) + i;
      Digest actual = sha256(dev.nand().view(page));
      bool acked = false;
      if (auto it = tap.acked.find(m.write_seq); it != tap.acked.end()) acked = it->second == actual;
      bool relocated = false;
      if (auto cur = ftl.current_version(m.lpa)) {
        relocated = cur->page != page && cur->write_seq == m.write_seq && sha256(dev.nand().view(cur->page)) == actual;
      }
      if (m.lifecycle != ftl::PageLifecycle::SafeToErase || !(acked || relocated)) ++violations;
    }
  });

  Prng prng(4242);
  auto logical = dev.logical_pages();
  SimTime t = kNanosPerSecond;
  std::uint64_t rejected = 0;
  for (std::uint64_t op = 0; op < 1'000'000; ++op) {
    t += prng.between(1, 200) * 1'000'000;
    // Periodic vault outages push the device into its capacity limit.
    faulty.faults().down = (op / 20000) % 10 == 9;
    double r = prng.unit();
    Lpa lpa = prng.below(logical);
    if (r < 0.70) {
      Bytes data(dev.page_size());
      prng.fill(data.data(), data.size());
      try {
        dev.write(lpa, data, t);
      } catch (const Error& e) {
        if (e.code() != Errc::CapacityExhausted) throw;
        ++rejected;
      }
    } else if (r < 0.75) {
      dev.trim(lpa, std::min<std::uint64_t>(prng.between(1, 8), logical - lpa), t);
    } else {
      dev.read(lpa, t);
    }
  }
  auto stuck = ftl.check_invariants();
  note(std::to_string(erases) + " block erases covering " + std::to_string(erased_pages) + " pages, " +
       std::to_string(tap.acked.size()) + " acked versions, " + std::to_string(rejected) +
       " writes refused during outages");
  verdict(9, violations == 0 && erases > 0 && stuck.empty(), "1M random ops never erase an unacknowledged version",
          std::to_string(violations) + " violations");
}

void criterion_10() {
  auto on = overhead_on.final.counters.flash_erases;
  auto off = overhead_off.final.counters.flash_erases;
  double ratio = off ? static_cast<double>(on) / static_cast<double>(off) : 0.0;
  verdict(10, off > 0 && ratio <= 1.5, "block erases with retention and offload <= 1.5x conventional",
          std::to_string(on) + " vs " + std::to_string(off) + " erases, ratio " + fmt(ratio, 3));
}

}  // namespace

int main() {
  TempDir root;
  std::vector<std::pair<int, std::function<void()>>> steps{
      {1, [&] { criterion_1(root.path()); }}, {2, [&] { criterion_2(root.path()); }},
      {3, [&] { criterion_3(root.path()); }}, {4, [&] { criterion_4(root.path()); }},
      {5, [&] { criterion_5(root.path()); }}, {6, [&] { criterion_6(root.path()); }},
      {7, [&] { criterion_7(root.path()); }}, {8, [&] { criterion_8(root.path()); }},
      {9, [&] { criterion_9(root.path()); }}, {10, [&] { criterion_10(); }},
  };
  for (auto& [number, step] : steps) {
    auto start = std::chrono::steady_clock::now();
    try {
      step();
    } catch (const std::exception& e) {
      verdict(number, false, "aborted", e.what());
    }
    note("criterion " + std::to_string(number) + " took " + fmt(seconds_since(start)) + " s");
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL") << std::endl;
  return failures == 0 ? 0 : 1;
}
