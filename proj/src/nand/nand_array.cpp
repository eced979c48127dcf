#include "rssd/nand/nand_array.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "rssd/common/codec.hpp"
#include "rssd/common/error.hpp"

namespace rssd::nand {

namespace {

constexpr char kSnapshotMagic[8] = {'R', 'S', 'N', 'A', 'N', 'D', '0', '1'};

}  // namespace

NandArray::NandArray(const Geometry& geometry) : geometry_(geometry) {
  geometry_.validate();
  data_.assign(geometry_.raw_bytes(), 0xff);
  states_.assign(geometry_.total_pages(), RawPageState::Erased);
  erase_counts_.assign(geometry_.total_blocks(), 0);
}

void NandArray::check_page(PageIndex page) const {
  if (page >= states_.size()) {
    throw Error(Errc::BadAddress, "page index " + std::to_string(page));
  }
}

void NandArray::program(PageIndex page, ByteView data) {
  check_page(page);
  if (data.size() != geometry_.page_size) {
    throw Error(Errc::BadLength, std::to_string(data.size()) + " != page_size " +
                                     std::to_string(geometry_.page_size));
  }
  if (states_[page] == RawPageState::Programmed) {
    throw Error(Errc::ProgramOnProgrammed, to_string(geometry_.address_of(page)));
  }
  std::memcpy(data_.data() + std::uint64_t{page} * geometry_.page_size, data.data(), data.size());
  states_[page] = RawPageState::Programmed;
  std::lock_guard lock(counters_mutex_);
  ++total_programs_;
}

ByteView NandArray::view(PageIndex page) const {
  check_page(page);
  if (states_[page] != RawPageState::Programmed) {
    throw Error(Errc::ReadErased, to_string(geometry_.address_of(page)));
  }
  {
    std::lock_guard lock(counters_mutex_);
    ++total_reads_;
  }
  return ByteView(data_.data() + std::uint64_t{page} * geometry_.page_size, geometry_.page_size);
}

Bytes NandArray::read(PageIndex page) const {
  auto v = view(page);
  return Bytes(v.begin(), v.end());
}

void NandArray::erase(BlockIndex block) {
  if (block >= erase_counts_.size()) {
    throw Error(Errc::BadAddress, "block index " + std::to_string(block));
  }
  PageIndex first = geometry_.first_page(block);
  std::fill_n(states_.begin() + first, geometry_.pages_per_block, RawPageState::Erased);
  std::lock_guard lock(counters_mutex_);
  ++erase_counts_[block];
  ++total_erases_;
}

std::uint64_t NandArray::erase_count(BlockIndex block) const {
  std::lock_guard lock(counters_mutex_);
  return erase_counts_.at(block);
}

void NandArray::program_page(const PhysPageAddr& addr, ByteView data) {
  if (!geometry_.contains(addr)) throw Error(Errc::BadAddress, to_string(addr));
  program(geometry_.page_index(addr), data);
}

Bytes NandArray::read_page(const PhysPageAddr& addr) const {
  if (!geometry_.contains(addr)) throw Error(Errc::BadAddress, to_string(addr));
  return read(geometry_.page_index(addr));
}

void NandArray::erase_block(std::uint32_t channel, std::uint32_t chip, std::uint32_t block) {
  if (channel >= geometry_.channels || chip >= geometry_.chips_per_channel ||
      block >= geometry_.blocks_per_chip) {
    throw Error(Errc::BadAddress, "block (" + std::to_string(channel) + "," + std::to_string(chip) +
                                      "," + std::to_string(block) + ")");
  }
  erase(geometry_.block_index(channel, chip, block));
}

RawPageState NandArray::page_state(const PhysPageAddr& addr) const {
  if (!geometry_.contains(addr)) throw Error(Errc::BadAddress, to_string(addr));
  return states_[geometry_.page_index(addr)];
}

WearCounters NandArray::wear_report() const {
  std::lock_guard lock(counters_mutex_);
  return WearCounters{erase_counts_, total_programs_, total_erases_, total_reads_};
}

void NandArray::save_snapshot(const std::filesystem::path& path) const {
  Bytes header;
  ByteWriter w(header);
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kSnapshotMagic), 8));
  w.u32(geometry_.channels);
  w.u32(geometry_.chips_per_channel);
  w.u32(geometry_.blocks_per_chip);
  w.u32(geometry_.pages_per_block);
  w.u32(geometry_.page_size);
  auto wear = wear_report();
  w.u64(wear.total_programs);
  w.u64(wear.total_erases);
  w.u64(wear.total_reads);
  for (auto c : wear.block_erase_counts) w.u64(c);
  for (auto s : states_) w.u8(static_cast<std::uint8_t>(s));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size()));
  if (!out) throw Error(Errc::StorageFailure, "writing snapshot " + path.string());
}

std::unique_ptr<NandArray> NandArray::load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::StorageFailure, "cannot open snapshot " + path.string());
  Bytes all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(all);
  auto magic = r.raw(8);
  if (!std::equal(magic.begin(), magic.end(), kSnapshotMagic)) {
    throw Error(Errc::StorageFailure, "not a NAND snapshot: " + path.string());
  }
  Geometry g;
  g.channels = r.u32();
  g.chips_per_channel = r.u32();
  g.blocks_per_chip = r.u32();
  g.pages_per_block = r.u32();
  g.page_size = r.u32();
  auto nand = std::make_unique<NandArray>(g);
  nand->total_programs_ = r.u64();
  nand->total_erases_ = r.u64();
  nand->total_reads_ = r.u64();
  for (auto& c : nand->erase_counts_) c = r.u64();
  for (auto& s : nand->states_) s = static_cast<RawPageState>(r.u8());
  auto data = r.raw(nand->data_.size());
  std::copy(data.begin(), data.end(), nand->data_.begin());
  return nand;
}

}  // namespace rssd::nand
