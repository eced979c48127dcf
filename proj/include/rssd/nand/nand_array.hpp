#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "rssd/common/types.hpp"
#include "rssd/nand/geometry.hpp"

namespace rssd::nand {

enum class RawPageState : std::uint8_t { Erased, Programmed };

struct WearCounters {
  std::vector<std::uint64_t> block_erase_counts;
  std::uint64_t total_programs = 0;
  std::uint64_t total_erases = 0;
  std::uint64_t total_reads = 0;
};

/// In-memory raw NAND array with write-once pages and block erase.
///
/// Mutations must be serialized by the caller. wear_report() may be called
/// from any thread and returns a consistent snapshot.
class NandArray {
 public:
  explicit NandArray(const Geometry& geometry);

  const Geometry& geometry() const { return geometry_; }

  void program_page(const PhysPageAddr& addr, ByteView data);
  Bytes read_page(const PhysPageAddr& addr) const;
  void erase_block(std::uint32_t channel, std::uint32_t chip, std::uint32_t block);
  RawPageState page_state(const PhysPageAddr& addr) const;
  WearCounters wear_report() const;

  // Flat-index variants used by the FTL hot path.
  void program(PageIndex page, ByteView data);
  Bytes read(PageIndex page) const;
  /// Zero-copy view of a programmed page; valid until the block is erased.
  ByteView view(PageIndex page) const;
  void erase(BlockIndex block);
  RawPageState state(PageIndex page) const { return states_[page]; }
  std::uint64_t erase_count(BlockIndex block) const;

  /// Binary snapshot of page contents, states and wear counters.
  void save_snapshot(const std::filesystem::path& path) const;
  static std::unique_ptr<NandArray> load_snapshot(const std::filesystem::path& path);

 private:
  void check_page(PageIndex page) const;

  Geometry geometry_;
  std::vector<std::uint8_t> data_;
  std::vector<RawPageState> states_;

  mutable std::mutex counters_mutex_;
  std::vector<std::uint64_t> erase_counts_;
  std::uint64_t total_programs_ = 0;
  std::uint64_t total_erases_ = 0;
  mutable std::uint64_t total_reads_ = 0;
};

}  // namespace rssd::nand
