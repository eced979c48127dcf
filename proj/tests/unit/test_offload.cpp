#include <catch_amalgamated.hpp>

#include <random>

#include "device_fixture.hpp"
#include "rssd/common/error.hpp"
#include "rssd/offload/engine.hpp"
#include "rssd/offload/protocol.hpp"
#include "segment_gen.hpp"

using namespace rssd;
using namespace rssd::offload;
using rssd::testing::DeviceRig;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Internal;
}

Bytes page(std::uint8_t v, std::size_t n = 64) { return testing::page_of(v, n); }

/// Writes `n` overwrites spread over a few lpas.
void churn(device::Device& d, int n, SimTime start = 1, int lpas = 4) {
  for (int i = 0; i < n; ++i) {
    d.write(i % lpas, page(static_cast<std::uint8_t>(i)), start + i * kNanosPerSecond);
  }
}

}  // namespace

TEST_CASE("Segment - canonical encoding round trips") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    auto seg = testing::random_segment(rng, 1 + i);
    REQUIRE(check_segment_shape(seg).empty());
    auto bytes = encode_segment(seg);
    REQUIRE(decode_segment(bytes) == seg);
    REQUIRE(encode_segment(decode_segment(bytes)) == bytes);
  }
}

TEST_CASE("Segment - strict decode rejects trailing and truncated input") {
  std::mt19937_64 rng(2);
  auto seg = testing::random_segment(rng, 5);
  auto bytes = encode_segment(seg);
  auto longer = bytes;
  longer.push_back(0);
  CHECK(code_of([&] { decode_segment(longer); }) == Errc::MalformedFrame);
  for (std::size_t cut : {std::size_t{0}, std::size_t{1}, bytes.size() / 2, bytes.size() - 1}) {
    Bytes shorter(bytes.begin(), bytes.begin() + cut);
    CHECK(code_of([&] { decode_segment(shorter); }) == Errc::MalformedFrame);
  }
}

TEST_CASE("Segment - shape check flags unordered records") {
  std::mt19937_64 rng(3);
  OffloadSegment seg;
  do {
    seg = testing::random_segment(rng, 1);
  } while (seg.page_records.size() < 2);
  std::swap(seg.page_records[0], seg.page_records[1]);
  CHECK_FALSE(check_segment_shape(seg).empty());
  seg = testing::random_segment(rng, 1);
  seg.page_records.push_back(PageRecord{1u << 30, 0, 0, Bytes(3)});
  CHECK_FALSE(check_segment_shape(seg).empty());
}

TEST_CASE("Segment - bundle digest binds every record field") {
  std::vector<PageRecord> recs{{4, 7, 100, Bytes(16, 1)}, {9, 8, 200, Bytes(16, 2)}};
  auto base = bundle_digest(3, recs);
  CHECK(bundle_digest(4, recs) != base);
  auto r = recs;
  r[1].lpa = 9;
  CHECK(bundle_digest(3, r) != base);
  r = recs;
  r[0].timestamp = 101;
  CHECK(bundle_digest(3, r) != base);
  r = recs;
  r[0].data[5] ^= 1;
  CHECK(bundle_digest(3, r) != base);
}

TEST_CASE("Frame - encrypt, compress and decode round trip") {
  std::mt19937_64 rng(4);
  auto key = DeviceKey::random();
  for (int i = 0; i < 300; ++i) {
    auto seg = testing::random_segment(rng, 1 + rng() % 1000);
    for (auto c : {Compression::None, Compression::Zlib}) {
      auto frame = encode_frame(seg, key, c);
      REQUIRE(peek_segment_id(frame) == seg.segment_id);
      REQUIRE(decode_frame(frame, key) == seg);
      REQUIRE(encode_frame(seg, key, c) == frame);
    }
  }
}

TEST_CASE("Frame - compression shrinks text-like pages") {
  OffloadSegment seg;
  std::mt19937_64 rng(5);
  seg = testing::random_segment(rng, 1);
  seg.page_size = 4096;
  seg.page_records = {PageRecord{1, 0, 0, Bytes(4096, 'a')}, PageRecord{2, 1, 0, Bytes(4096, 'b')}};
  auto key = DeviceKey::random();
  auto plain = encode_frame(seg, key, Compression::None);
  auto packed = encode_frame(seg, key, Compression::Zlib);
  CHECK(packed.size() < plain.size() / 4);
  CHECK(decode_frame(packed, key) == seg);
}

TEST_CASE("Frame - wrong key and every flipped bit are rejected") {
  std::mt19937_64 rng(6);
  auto key = DeviceKey::random();
  auto seg = testing::random_segment(rng, 77);
  auto frame = encode_frame(seg, key);
  CHECK(code_of([&] { decode_frame(frame, DeviceKey::random()); }) == Errc::AuthenticationFailed);
  for (std::size_t bit = 0; bit < frame.size() * 8; ++bit) {
    auto copy = frame;
    copy[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    auto code = code_of([&] { decode_frame(copy, key); });
    REQUIRE((code == Errc::AuthenticationFailed || code == Errc::MalformedFrame));
  }
  Bytes truncated(frame.begin(), frame.end() - 1);
  CHECK(code_of([&] { decode_frame(truncated, key); }) == Errc::MalformedFrame);
}

TEST_CASE("Protocol - replies round trip") {
  for (const auto& r : {Reply::ack(9), Reply::nack(NackReason::OutOfOrder, 4),
                        Reply::nack(NackReason::DigestMismatch, 77)}) {
    CHECK(decode_reply(encode_reply(r)) == r);
  }
  CHECK_THROWS_AS(decode_reply(Bytes{1, 99, 0, 0, 0, 0, 0, 0, 0, 0}), Error);
  CHECK_THROWS_AS(decode_reply(Bytes{0, 1}), Error);
  CHECK(to_string(NackReason::Conflict) == "Conflict");
}

TEST_CASE("Engine - requires logging") {
  auto cfg = DeviceRig::small_config();
  cfg.logging = false;
  device::Device d(cfg);
  CHECK(d.engine() == nullptr);
  nand::NandArray nand(cfg.ftl.geometry);
  oplog::OpLog log({}, false);
  ftl::Ftl ftl(cfg.ftl, nand, log);
  CHECK(code_of([&] { OffloadEngine(ftl, log, cfg.key); }) == Errc::ConfigError);
}

TEST_CASE("Engine - drain ships pages and logs, then pages become erasable") {
  DeviceRig rig;
  auto& d = *rig.device;
  // No maintenance-triggered offload yet: stay under the watermarks.
  d.attach_vault(nullptr);
  churn(d, 12);
  REQUIRE(d.ftl().page_counts().retained == 8);
  d.attach_vault(rig.transport.get());
  REQUIRE(d.sync_offload());
  auto counts = d.ftl().page_counts();
  CHECK(counts.retained == 0);
  CHECK(counts.pending == 0);
  CHECK(counts.safe == 8);
  CHECK_FALSE(d.engine()->has_work());
  auto status = rig.store->status();
  CHECK(status.page_records == 8);
  // Every entry except the trailing OffloadAcked is in the vault.
  CHECK(status.last_seq == d.log().last_seq() - 1);
  CHECK(status.last_tail_hash != d.log().tail_hash());
  CHECK(d.engine()->stats().segments_acked >= 1);
}

TEST_CASE("Engine - unreachable vault backs off exponentially with a cap") {
  DeviceRig rig;
  auto& d = *rig.device;
  vault::FaultyTransport faulty(*rig.transport, {});
  faulty.faults().down = true;
  d.attach_vault(nullptr);
  churn(d, 6);
  d.attach_vault(&faulty);
  auto* e = d.engine();
  SimTime now = d.ftl().now();
  std::vector<SimTime> backoffs;
  for (int i = 0; i < 9; ++i) {
    CHECK_FALSE(e->step(now));
    backoffs.push_back(e->current_backoff());
    CHECK(e->in_backoff(now));
    CHECK_FALSE(e->step(now));  // no attempt inside the window
    now = e->next_attempt();
  }
  std::vector<SimTime> want{1, 2, 4, 8, 16, 32, 60, 60, 60};
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(backoffs[i] == want[i] * kNanosPerSecond);
  // Pages were rolled back, never released.
  CHECK(d.ftl().page_counts().safe == 0);
  CHECK(d.ftl().page_counts().pending == 0);
  CHECK(e->stats().unreachable == 9);

  faulty.faults().down = false;
  CHECK(e->step(now));
  CHECK(e->current_backoff() == 0);
  CHECK(d.ftl().page_counts().safe == 2);
}

TEST_CASE("Engine - a lost reply is resolved by an idempotent resend") {
  DeviceRig rig;
  auto& d = *rig.device;
  vault::FaultyTransport faulty(*rig.transport, {});
  d.attach_vault(nullptr);
  churn(d, 8);
  d.attach_vault(&faulty);
  faulty.faults().drop_reply = 1.0;
  auto* e = d.engine();
  CHECK_FALSE(e->step(d.ftl().now()));
  auto held = e->held_segments();
  REQUIRE(held.size() == 1);
  CHECK(rig.store->status().last_segment_id == held[0]);  // the vault has it
  CHECK(d.ftl().page_counts().safe == 0);                 // the device does not know
  Bytes first_frame = *e->held_frame(held[0]);
  CHECK(decode_frame(first_frame, testing::test_key()).segment_id == held[0]);

  faulty.faults().drop_reply = 0.0;
  CHECK(e->step(e->next_attempt()));
  CHECK(e->held_segments().empty());
  CHECK(d.ftl().page_counts().safe == 4);
  CHECK(rig.store->status().segments == 1);
  CHECK(e->stats().frames_sent == 2);
}

TEST_CASE("Engine - out-of-order ship resends the expected segment first") {
  DeviceRig rig;
  auto& d = *rig.device;
  d.attach_vault(nullptr);
  churn(d, 8);
  auto* e = d.engine();
  auto first = e->build_segment(2).segment_id;
  d.write(0, page(200), d.ftl().now() + 1);
  auto second = e->build_segment(16).segment_id;
  REQUIRE(second == first + 1);
  d.attach_vault(rig.transport.get());
  auto reply = e->ship(second);
  CHECK(reply.kind == Reply::Kind::Ack);
  CHECK(reply.segment_id == second);
  CHECK(e->stats().out_of_order_resends == 1);
  CHECK(e->held_segments().empty());
  CHECK(rig.store->status().last_segment_id == second);
  CHECK(d.ftl().page_counts().retained == 0);
}

TEST_CASE("Engine - a Nack never releases pages") {
  DeviceRig rig;
  auto& d = *rig.device;
  vault::FaultyTransport faulty(*rig.transport, {});
  faulty.mutate = [](ByteView frame) {
    Bytes b(frame.begin(), frame.end());
    b[b.size() - 1] ^= 1;
    return b;
  };
  d.attach_vault(nullptr);
  churn(d, 8);
  d.attach_vault(&faulty);
  auto* e = d.engine();
  CHECK_FALSE(e->step(d.ftl().now()));
  CHECK(e->stats().nacks == 1);
  CHECK(d.ftl().page_counts().safe == 0);
  CHECK(d.ftl().page_counts().retained == 4);
  CHECK(rig.store->status().segments == 0);
  faulty.mutate = nullptr;
  CHECK(e->drain(e->next_attempt()));
  CHECK(d.ftl().page_counts().safe == 4);
}

TEST_CASE("Engine - NothingToOffload when idle") {
  DeviceRig rig;
  auto& d = *rig.device;
  CHECK(code_of([&] { d.engine()->build_segment(4); }) == Errc::NothingToOffload);
  d.write(0, page(1), 1);
  CHECK(d.sync_offload());
  CHECK(code_of([&] { d.engine()->build_segment(4); }) == Errc::NothingToOffload);
}
