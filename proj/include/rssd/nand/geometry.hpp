#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace rssd::nand {

/// Zero-based physical location of one flash page.
struct PhysPageAddr {
  std::uint32_t channel = 0;
  std::uint32_t chip = 0;
  std::uint32_t block = 0;
  std::uint32_t page = 0;

  auto operator<=>(const PhysPageAddr&) const = default;
};

std::string to_string(const PhysPageAddr& addr);

/// Flat page index: pages are numbered block by block, and blocks are
/// numbered channel-major (channel, chip, block).
using PageIndex = std::uint32_t;
using BlockIndex = std::uint32_t;

inline constexpr PageIndex kNoPage = 0xffffffffu;

struct Geometry {
  std::uint32_t channels = 2;
  std::uint32_t chips_per_channel = 2;
  std::uint32_t blocks_per_chip = 128;
  std::uint32_t pages_per_block = 64;
  std::uint32_t page_size = 4096;

  /// 2 x 2 x 128 x 64 x 4 KiB = 128 MiB raw.
  static Geometry desk_scale() { return Geometry{}; }
  /// 1 x 1 x 4 blocks x 8 pages x 16-byte pages.
  static Geometry unit_test() { return Geometry{1, 1, 4, 8, 16}; }

  /// Throws Error(ConfigError) unless every count is >= 1 and page_size is
  /// a power of two >= 16.
  void validate() const;

  std::uint64_t total_blocks() const {
    return std::uint64_t{channels} * chips_per_channel * blocks_per_chip;
  }
  std::uint64_t total_pages() const { return total_blocks() * pages_per_block; }
  std::uint64_t raw_bytes() const { return total_pages() * page_size; }

  bool contains(const PhysPageAddr& a) const {
    return a.channel < channels && a.chip < chips_per_channel && a.block < blocks_per_chip &&
           a.page < pages_per_block;
  }

  BlockIndex block_index(std::uint32_t channel, std::uint32_t chip, std::uint32_t block) const {
    return (channel * chips_per_channel + chip) * blocks_per_chip + block;
  }
  PageIndex page_index(const PhysPageAddr& a) const {
    return block_index(a.channel, a.chip, a.block) * pages_per_block + a.page;
  }
  PhysPageAddr address_of(PageIndex index) const;
  BlockIndex block_of(PageIndex index) const { return index / pages_per_block; }
  PageIndex first_page(BlockIndex block) const { return block * pages_per_block; }

  bool operator==(const Geometry&) const = default;
};

}  // namespace rssd::nand
