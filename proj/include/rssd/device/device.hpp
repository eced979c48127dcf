#pragma once

#include <memory>

#include "rssd/ftl/ftl.hpp"
#include "rssd/host/host_interface.hpp"
#include "rssd/nand/nand_array.hpp"
#include "rssd/offload/engine.hpp"
#include "rssd/oplog/op_log.hpp"

namespace rssd::device {

/// Per-operation flash latencies used for the simulated busy-time model.
struct FlashCost {
  SimTime read = 50'000;       // 50 us
  SimTime program = 500'000;   // 500 us
  SimTime erase = 3'000'000;   // 3 ms
};

struct DeviceConfig {
  ftl::FtlConfig ftl;
  bool logging = true;
  oplog::SealPolicy seal;
  offload::OffloadConfig offload;
  DeviceKey key;
  FlashCost cost;

  /// Offload runs only when both logging and retention are on.
  bool offload_capable() const { return logging && ftl.retention; }
  void validate() const;
};

struct DeviceCounters {
  std::uint64_t flash_reads = 0;
  std::uint64_t flash_programs = 0;
  std::uint64_t flash_erases = 0;
  std::uint64_t log_bytes = 0;
  std::uint64_t log_pages = 0;  // log bytes rounded up to whole pages
  SimTime busy_time = 0;        // simulated flash time under the cost model
};

/// The simulated SSD: NAND array, FTL, operation log and offload engine
/// behind the host command surface.
///
/// After every host command the device runs its background work inline:
/// an offload round when retained pages or sealed logs pile up, then
/// watermark GC. When an allocation finds no free page, the FTL calls back
/// into the offload engine before giving up with CapacityExhausted.
class Device : public host::HostInterface {
 public:
  explicit Device(DeviceConfig config);

  Seq write(Lpa lpa, ByteView data, SimTime now) override;
  Seq trim(Lpa start, std::uint64_t count, SimTime now) override;
  std::optional<Bytes> read(Lpa lpa, SimTime now) override;
  std::uint64_t logical_pages() const override { return ftl_.logical_pages(); }
  std::uint32_t page_size() const override { return ftl_.page_size(); }

  /// Connects the offload path; nullptr disconnects it.
  void attach_vault(offload::VaultTransport* transport);

  /// Ships everything that can be shipped now.
  bool sync_offload();
  ftl::GcReport force_gc();
  /// Background work normally run after each command.
  void maintenance();

  const DeviceConfig& config() const { return config_; }
  nand::NandArray& nand() { return nand_; }
  oplog::OpLog& log() { return log_; }
  ftl::Ftl& ftl() { return ftl_; }
  const ftl::Ftl& ftl() const { return ftl_; }
  offload::OffloadEngine* engine() { return engine_.get(); }

  DeviceCounters counters() const;

 private:
  DeviceConfig config_;
  nand::NandArray nand_;
  oplog::OpLog log_;
  ftl::Ftl ftl_;
  std::unique_ptr<offload::OffloadEngine> engine_;
};

}  // namespace rssd::device
