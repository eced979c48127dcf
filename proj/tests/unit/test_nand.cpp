#include <catch_amalgamated.hpp>

#include "rssd/common/error.hpp"
#include "rssd/nand/geometry.hpp"
#include "rssd/nand/nand_array.hpp"
#include "support.hpp"

using namespace rssd;
using namespace rssd::nand;

namespace {
Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Internal;
}
}  // namespace

TEST_CASE("Geometry - flat indexing round trips") {
  Geometry g{2, 3, 5, 7, 16};
  REQUIRE_NOTHROW(g.validate());
  CHECK(g.total_pages() == 2u * 3 * 5 * 7);
  for (PageIndex i = 0; i < g.total_pages(); ++i) {
    auto a = g.address_of(i);
    REQUIRE(g.contains(a));
    REQUIRE(g.page_index(a) == i);
  }
}

TEST_CASE("Geometry - validation") {
  CHECK_THROWS_AS((Geometry{0, 1, 1, 1, 16}.validate()), Error);
  CHECK_THROWS_AS((Geometry{1, 1, 1, 1, 24}.validate()), Error);
  CHECK_THROWS_AS((Geometry{1, 1, 1, 1, 8}.validate()), Error);
  CHECK_NOTHROW(Geometry::desk_scale().validate());
  CHECK(Geometry::desk_scale().raw_bytes() == 128ull << 20);
}

TEST_CASE("NandArray - write-once pages") {
  NandArray nand(Geometry::unit_test());
  PhysPageAddr a{0, 0, 1, 2};
  auto data = testing::page_of(0x5a, 16);
  CHECK(nand.page_state(a) == RawPageState::Erased);
  CHECK(code_of([&] { nand.read_page(a); }) == Errc::ReadErased);
  nand.program_page(a, data);
  CHECK(nand.read_page(a) == data);
  CHECK(code_of([&] { nand.program_page(a, data); }) == Errc::ProgramOnProgrammed);
}

TEST_CASE("NandArray - address and length errors") {
  NandArray nand(Geometry::unit_test());
  auto data = testing::page_of(1, 16);
  CHECK(code_of([&] { nand.program_page({0, 0, 4, 0}, data); }) == Errc::BadAddress);
  CHECK(code_of([&] { nand.program_page({1, 0, 0, 0}, data); }) == Errc::BadAddress);
  CHECK(code_of([&] { nand.program_page({0, 0, 0, 0}, testing::page_of(1, 15)); }) == Errc::BadLength);
  CHECK(code_of([&] { nand.erase_block(0, 0, 9); }) == Errc::BadAddress);
}

TEST_CASE("NandArray - erase resets a block and counts wear") {
  NandArray nand(Geometry::unit_test());
  for (std::uint32_t p = 0; p < 8; ++p) nand.program_page({0, 0, 3, p}, testing::page_of(p, 16));
  nand.erase_block(0, 0, 3);
  nand.erase_block(0, 0, 3);
  for (std::uint32_t p = 0; p < 8; ++p) CHECK(nand.page_state({0, 0, 3, p}) == RawPageState::Erased);
  auto wear = nand.wear_report();
  CHECK(wear.block_erase_counts[3] == 2);
  CHECK(wear.total_erases == 2);
  CHECK(wear.total_programs == 8);
  nand.program_page({0, 0, 3, 0}, testing::page_of(9, 16));
  CHECK(nand.read_page({0, 0, 3, 0}) == testing::page_of(9, 16));
}

TEST_CASE("NandArray - snapshot round trip") {
  testing::TempDir dir;
  NandArray nand(Geometry::unit_test());
  nand.program_page({0, 0, 0, 1}, testing::page_of(7, 16));
  nand.erase_block(0, 0, 2);
  nand.save_snapshot(dir.path() / "snap");
  auto loaded = NandArray::load_snapshot(dir.path() / "snap");
  CHECK(loaded->geometry() == nand.geometry());
  CHECK(loaded->read_page({0, 0, 0, 1}) == testing::page_of(7, 16));
  CHECK(loaded->page_state({0, 0, 0, 0}) == RawPageState::Erased);
  CHECK(loaded->erase_count(2) == 1);
}
