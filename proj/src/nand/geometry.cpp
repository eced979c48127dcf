#include "rssd/nand/geometry.hpp"

#include "rssd/common/error.hpp"

namespace rssd::nand {

std::string to_string(const PhysPageAddr& addr) {
  return "(" + std::to_string(addr.channel) + "," + std::to_string(addr.chip) + "," +
         std::to_string(addr.block) + "," + std::to_string(addr.page) + ")";
}

void Geometry::validate() const {
  if (channels == 0 || chips_per_channel == 0 || blocks_per_chip == 0 || pages_per_block == 0) {
    throw Error(Errc::ConfigError, "geometry counts must all be >= 1");
  }
  if (page_size < 16 || (page_size & (page_size - 1)) != 0) {
    throw Error(Errc::ConfigError, "page_size must be a power of two >= 16");
  }
  if (total_pages() >= kNoPage) {
    throw Error(Errc::ConfigError, "geometry exceeds 2^32 - 1 pages");
  }
}

PhysPageAddr Geometry::address_of(PageIndex index) const {
  PhysPageAddr a;
  a.page = index % pages_per_block;
  std::uint32_t block = index / pages_per_block;
  a.block = block % blocks_per_chip;
  std::uint32_t chip = block / blocks_per_chip;
  a.chip = chip % chips_per_channel;
  a.channel = chip / chips_per_channel;
  return a;
}

}  // namespace rssd::nand
