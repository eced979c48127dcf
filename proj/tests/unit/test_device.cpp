#include <catch_amalgamated.hpp>

#include "device_fixture.hpp"
#include "rssd/common/error.hpp"
#include "rssd/harness/harness.hpp"
#include "rssd/harness/trace.hpp"

using namespace rssd;
using rssd::testing::DeviceRig;

namespace {

Bytes page(std::uint8_t v) { return testing::page_of(v, 64); }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Internal;
}

}  // namespace

TEST_CASE("Device - config validation") {
  auto c = DeviceRig::small_config();
  c.offload.max_pages = 0;
  CHECK(code_of([&] { device::Device d(c); }) == Errc::ConfigError);
  c = DeviceRig::small_config();
  c.offload.backoff_cap = c.offload.backoff_initial - 1;
  CHECK(code_of([&] { device::Device d(c); }) == Errc::ConfigError);
  c = DeviceRig::small_config();
  c.seal.max_entries = 0;
  CHECK(code_of([&] { device::Device d(c); }) == Errc::ConfigError);
  c = DeviceRig::small_config();
  c.ftl.geometry.page_size = 100;
  CHECK(code_of([&] { device::Device d(c); }) == Errc::ConfigError);
}

TEST_CASE("Device - sustained overwrites stay within capacity through offload") {
  DeviceRig rig;
  auto& d = *rig.device;
  for (int i = 0; i < 3000; ++i) d.write(i % 40, page(static_cast<std::uint8_t>(i)), (i + 1) * kNanosPerSecond);
  CHECK(d.ftl().check_invariants().empty());
  CHECK(d.ftl().stats().gc_blocks_erased > 10);
  CHECK(d.ftl().stats().capacity_rejections == 0);
  auto st = rig.store->status();
  CHECK(st.page_records > 2000);
  CHECK(d.engine()->stats().segments_acked == st.segments);
  for (Lpa l = 0; l < 40; ++l) REQUIRE(d.read(l, d.ftl().now()).has_value());
}

TEST_CASE("Device - an unreachable vault eventually refuses writes") {
  DeviceRig rig;
  auto& d = *rig.device;
  vault::FaultyTransport faulty(*rig.transport, {});
  faulty.faults().down = true;
  d.attach_vault(&faulty);
  Errc failure = Errc::Internal;
  int accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    try {
      d.write(i % 10, page(static_cast<std::uint8_t>(i)), (i + 1) * kNanosPerSecond);
      ++accepted;
    } catch (const Error& e) {
      failure = e.code();
      break;
    }
  }
  CHECK(failure == Errc::CapacityExhausted);
  CHECK(accepted < 128);
  CHECK(d.ftl().page_counts().safe == 0);

  // Once the vault is back, writes succeed again.
  faulty.faults().down = false;
  SimTime later = d.ftl().now() + 2 * kNanosPerMinute;
  CHECK_NOTHROW(d.write(0, page(1), later));
  CHECK(d.ftl().check_invariants().empty());
}

TEST_CASE("Device - logging off gives a conventional baseline") {
  auto c = DeviceRig::small_config();
  c.logging = false;
  c.ftl.retention = false;
  device::Device d(c);
  CHECK(d.engine() == nullptr);
  for (int i = 0; i < 2000; ++i) d.write(i % 30, page(static_cast<std::uint8_t>(i)), i + 1);
  CHECK(d.log().resident().entries.empty());
  CHECK(d.counters().log_bytes == 0);
  CHECK(d.ftl().stats().gc_blocks_erased > 0);
}

TEST_CASE("Device - busy time follows the flash cost model") {
  DeviceRig rig(DeviceRig::small_config(), false);
  auto& d = *rig.device;
  d.write(0, page(1), 1);
  d.write(1, page(2), 2);
  d.read(0, 3);
  auto c = d.counters();
  CHECK(c.flash_programs == 2);
  CHECK(c.flash_reads == 1);
  CHECK(c.flash_erases == 0);
  CHECK(c.log_bytes == 2 * oplog::kEntryWireSize);
  CHECK(c.log_pages == (2 * oplog::kEntryWireSize + 63) / 64);
  CHECK(c.busy_time == 1 * 50'000 + (2 + c.log_pages) * 500'000);
}

TEST_CASE("Device - only the host surface is needed to drive it") {
  DeviceRig rig;
  harness::ShadowOracle oracle;
  harness::Harness h(*rig.device, oracle);
  harness::BenignParams p;
  p.ops = 3000;
  p.lpa_space = rig.device->logical_pages();
  auto report = h.replay_trace(harness::generate_benign(p));
  CHECK(report.read_mismatches == 0);
  CHECK(report.rejected_writes == 0);
  CHECK(rig.device->ftl().check_invariants().empty());
}
