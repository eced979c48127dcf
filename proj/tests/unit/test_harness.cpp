#include <catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>

#include "rssd/common/compress.hpp"
#include "rssd/common/crypto.hpp"
#include "rssd/common/error.hpp"
#include "rssd/harness/attacks.hpp"
#include "rssd/harness/harness.hpp"
#include "rssd/harness/oracle.hpp"
#include "rssd/harness/prng.hpp"
#include "rssd/harness/trace.hpp"

using namespace rssd;
using namespace rssd::harness;

namespace {

/// Plain in-memory block device; optionally refuses writes past a budget.
class MemoryDevice : public host::HostInterface {
 public:
  MemoryDevice(std::uint64_t pages, std::uint32_t page_size) : pages_(pages), page_size_(page_size) {}

  Seq write(Lpa lpa, ByteView data, SimTime) override {
    if (lpa >= pages_ || data.size() != page_size_) throw Error(Errc::OutOfRange, "bad write");
    if (write_budget_ == 0) throw Error(Errc::CapacityExhausted, "full");
    if (write_budget_ > 0) --write_budget_;
    data_[lpa] = Bytes(data.begin(), data.end());
    return ++seq_;
  }
  Seq trim(Lpa start, std::uint64_t count, SimTime) override {
    for (Lpa l = start; l < start + count; ++l) data_.erase(l);
    return ++seq_;
  }
  std::optional<Bytes> read(Lpa lpa, SimTime) override {
    auto it = data_.find(lpa);
    if (it == data_.end()) return std::nullopt;
    return it->second;
  }
  std::uint64_t logical_pages() const override { return pages_; }
  std::uint32_t page_size() const override { return page_size_; }

  std::int64_t write_budget_ = -1;

 private:
  std::uint64_t pages_;
  std::uint32_t page_size_;
  std::map<Lpa, Bytes> data_;
  Seq seq_ = 0;
};

std::size_t parse_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_trace(in);
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::TraceParseError);
    return static_cast<std::size_t>(e.detail().value_or(0));
  }
  return 0;
}

}  // namespace

TEST_CASE("Trace - parse and write round trip") {
  std::istringstream in("# comment\n\n100 W 5 2 77\n200 T 5 1 0\n  \n300 R 6 1 0\n");
  auto t = parse_trace(in);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == TraceOp{100, TraceOpKind::Write, 5, 2, 77});
  CHECK(t[1].kind == TraceOpKind::Trim);
  CHECK(t[2].kind == TraceOpKind::Read);
  std::ostringstream out;
  write_trace(out, t);
  std::istringstream again(out.str());
  CHECK(parse_trace(again) == t);
}

TEST_CASE("Trace - malformed lines report their line number") {
  CHECK(parse_error_line("1 W 0 1 0\n2 X 0 1 0\n") == 2);
  CHECK(parse_error_line("# c\n1 W 0 1\n") == 2);
  CHECK(parse_error_line("1 W 0 1 0 9\n") == 1);
  CHECK(parse_error_line("5 W 0 1 0\n4 W 0 1 0\n") == 2);
  CHECK(parse_error_line("1 W -3 1 0\n") == 1);
  CHECK(parse_error_line("1 W 0 0 0\n") == 1);
  CHECK(parse_error_line("1 W 0 1 99999999999999999999999\n") == 1);
}

TEST_CASE("Prng - reproducible and bounded") {
  Prng a(9), b(9), c(10);
  for (int i = 0; i < 100; ++i) {
    auto x = a.next();
    CHECK(x == b.next());
  }
  CHECK(a.next() != c.next());
  Prng p(1);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 7000; ++i) {
    auto v = p.below(7);
    REQUIRE(v < 7);
    ++hist[v];
  }
  for (int h : hist) CHECK(h > 800);
  for (int i = 0; i < 1000; ++i) {
    auto u = p.unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  std::vector<int> pool{1, 2, 3, 4, 5, 6, 7, 8};
  auto s = p.sample(pool, 3);
  CHECK(s.size() == 3);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::set<int>(s.begin(), s.end()).size() == 3);
}

TEST_CASE("Prng - payload shapes") {
  auto a = benign_payload(5, 4096);
  CHECK(a == benign_payload(5, 4096));
  CHECK(a != benign_payload(6, 4096));
  CHECK(a.size() == 4096);
  CHECK(deflate_bytes(a).size() < a.size() / 2);
  Prng p(3);
  auto r = ransom_payload(p, 4096);
  CHECK(deflate_bytes(r).size() > r.size() * 95 / 100);
}

TEST_CASE("Trace - benign generator") {
  BenignParams p;
  p.ops = 4000;
  p.lpa_space = 256;
  auto t1 = generate_benign(p);
  auto t2 = generate_benign(p);
  CHECK(t1 == t2);
  p.seed = 2;
  CHECK(generate_benign(p) != t1);
  std::size_t reads = 0, trims = 0;
  for (std::size_t i = 0; i < t1.size(); ++i) {
    if (i > 0) REQUIRE(t1[i].timestamp >= t1[i - 1].timestamp);
    REQUIRE(t1[i].lpa + t1[i].length <= 256);
    reads += t1[i].kind == TraceOpKind::Read;
    trims += t1[i].kind == TraceOpKind::Trim;
  }
  CHECK(reads > 1000);
  CHECK(reads < 1400);
  CHECK(trims > 50);
  CHECK(trims < 200);
  // Average rate close to 4 ops/s.
  double span = static_cast<double>(t1.back().timestamp - t1.front().timestamp) / kNanosPerSecond;
  CHECK(span == Catch::Approx(1000.0).epsilon(0.05));

  auto fill = generate_fill(10, 0, 2.0, 1);
  REQUIRE(fill.size() == 10);
  CHECK(fill[9].timestamp == 4'500'000'000ULL);
  CHECK(fill[3].lpa == 3);
}

TEST_CASE("Oracle - point-in-time answers") {
  ShadowOracle o;
  Bytes a(16, 'a'), b(16, 'b');
  o.record_write(1, 1, 10, a);
  o.record_write(1, 2, 20, b);
  o.record_trim(1, 2, 3, 30);  // lpa 2 is unmapped: no event
  o.record_write(1, 4, 30, a);
  CHECK(o.history(1).size() == 4);
  CHECK(o.history(2).empty());
  CHECK_FALSE(o.as_of(1, 5).mapped);
  CHECK(o.as_of(1, 10).seq == 1);
  CHECK(*o.as_of(1, 15).bytes == a);
  CHECK(*o.as_of(1, 25).bytes == b);
  CHECK(o.as_of(1, 30).seq == 4);
  auto trimmed = o.as_of(1, 30, 3);
  CHECK_FALSE(trimmed.mapped);
  CHECK(trimmed.seq == 3);
  CHECK(o.current(1).digest == sha256(a));
  CHECK(o.mapped_count() == 1);

  ShadowOracle d(ShadowOracle::Mode::DigestOnly);
  d.record_write(0, 1, 1, a);
  CHECK(d.current(0).bytes == nullptr);
  CHECK(d.current(0).digest == sha256(a));
}

TEST_CASE("Harness - replay keeps the oracle in lockstep") {
  MemoryDevice dev(128, 64);
  ShadowOracle oracle;
  Harness h(dev, oracle);
  BenignParams p;
  p.ops = 500;
  p.lpa_space = 128;
  auto trace = generate_benign(p);
  std::vector<std::size_t> checkpoints;
  auto report = h.replay_trace(trace, 1.0, [&](std::size_t n) { checkpoints.push_back(n); }, 100);
  CHECK(report.ops == 500);
  CHECK(report.read_mismatches == 0);
  CHECK(checkpoints == std::vector<std::size_t>{100, 200, 300, 400, 500});
  CHECK(report.first_timestamp == trace.front().timestamp);
  const auto& gt = h.ground_truth();
  for (std::size_t i = 0; i < gt.size(); ++i) {
    REQUIRE(gt[i].index == i);
    if (i > 0) REQUIRE(gt[i].timestamp >= gt[i - 1].timestamp);
  }
  // A second replay of the same trace continues after the current clock.
  auto before = h.now();
  auto second = h.replay_trace(trace, 2.0);
  CHECK(second.first_timestamp == before);
  auto span = second.last_timestamp - second.first_timestamp;
  auto orig = trace.back().timestamp - trace.front().timestamp;
  CHECK(span == Catch::Approx(orig / 2.0).epsilon(0.01));
  CHECK(h.read_mismatches() == 0);
}

TEST_CASE("Harness - rejected writes are recorded and not applied") {
  MemoryDevice dev(16, 32);
  ShadowOracle oracle;
  Harness h(dev, oracle);
  dev.write_budget_ = 1;
  CHECK(h.write(0, Bytes(32, 1), 1, Label::Benign, "x"));
  CHECK_FALSE(h.write(1, Bytes(32, 2), 2, Label::Benign, "x"));
  CHECK(h.rejected_writes() == 1);
  CHECK(h.ground_truth().back().rejected);
  CHECK_FALSE(oracle.is_mapped(1));
  CHECK_THROWS_AS(h.issue(TraceOp{3, TraceOpKind::Write, 15, 2, 0}, Label::Benign, "x", 3), Error);
}

TEST_CASE("Attacks - parse names") {
  CHECK(parse_attack("gc") == AttackKind::GcAttack);
  CHECK(parse_attack("timing") == AttackKind::TimingAttack);
  CHECK(parse_attack("trimming") == AttackKind::TrimmingAttack);
  CHECK_FALSE(parse_attack("wiper"));
}

namespace {
struct Prepared {
  MemoryDevice dev{400, 64};
  ShadowOracle oracle;
  Harness h{dev, oracle};
  Prepared() { h.replay_trace(generate_fill(200, kNanosPerSecond, 50.0, 3)); }
};
}  // namespace

TEST_CASE("Attacks - trimming attack copies, then trims every victim") {
  Prepared p;
  AttackParams params;
  auto run = trimming_attack(p.h, params);
  CHECK(run.victims.size() == 50);
  CHECK(run.attack_trims == 50);
  CHECK(run.attack_writes == 50);
  for (auto v : run.victims) CHECK_FALSE(p.oracle.is_mapped(v));
  CHECK(p.oracle.mapped_count() == 200);
  CHECK(p.h.read_mismatches() == 0);
  auto sched = run.schedule(p.h);
  CHECK(sched.size() == 150);
  CHECK(sched.front().phase == "read");
  CHECK(run.pre_attack_seq == 200);
}

TEST_CASE("Attacks - gc attack fills the device and keeps pressure") {
  Prepared p;
  AttackParams params;
  params.pressure_pages = 100;
  auto run = gc_attack(p.h, params);
  CHECK(p.oracle.mapped_count() == 380);  // ceil(0.95 * 400)
  CHECK(run.attack_writes == 50 + 180 + 100);
  for (auto v : run.victims) CHECK(p.oracle.history(v).size() == 2);
  params.fill_fraction = 0.0;
  Prepared q;
  auto enc = gc_attack(q.h, params);
  CHECK(enc.attack_writes == 50);
}

TEST_CASE("Attacks - timing attack interleaves at the configured rate") {
  Prepared p;
  BenignParams bp;
  bp.ops = 200;
  bp.lpa_space = 200;
  auto benign = generate_benign(bp);
  AttackParams params;
  params.ops_per_minute = 100;
  auto run = timing_attack(p.h, params, benign);
  auto sched = run.schedule(p.h);
  std::vector<SimTime> encrypt_times;
  std::size_t benign_ops = 0;
  for (const auto& op : sched) {
    if (op.label == Label::Attack && op.phase == "encrypt") encrypt_times.push_back(op.timestamp);
    if (op.label == Label::Benign) ++benign_ops;
  }
  REQUIRE(encrypt_times.size() == run.victims.size());
  SimTime interval = static_cast<SimTime>(std::llround(60.0 / 100.0 * kNanosPerSecond));
  for (std::size_t i = 1; i < encrypt_times.size(); ++i) CHECK(encrypt_times[i] - encrypt_times[i - 1] == interval);
  CHECK(benign_ops > 0);
  for (std::size_t i = 1; i < sched.size(); ++i) REQUIRE(sched[i].timestamp >= sched[i - 1].timestamp);
  CHECK(p.h.read_mismatches() == 0);

  Prepared q;
  params.ops_per_minute = 0;
  auto none = timing_attack(q.h, params, benign);
  CHECK(none.victims.empty());
  CHECK(none.attack_writes == 0);
}
