#include "rssd/device/device.hpp"

#include "rssd/common/error.hpp"

namespace rssd::device {

void DeviceConfig::validate() const {
  ftl.validate();
  if (offload.max_pages == 0) throw Error(Errc::ConfigError, "offload max_pages must be >= 1");
  if (offload.backoff_initial == 0 || offload.backoff_cap < offload.backoff_initial) {
    throw Error(Errc::ConfigError, "offload backoff must satisfy 0 < initial <= cap");
  }
  if (seal.max_entries == 0) throw Error(Errc::ConfigError, "seal max_entries must be >= 1");
}

Device::Device(DeviceConfig config)
    : config_((config.validate(), std::move(config))),
      nand_(config_.ftl.geometry),
      log_(config_.seal, config_.logging),
      ftl_(config_.ftl, nand_, log_) {
  if (config_.offload_capable()) {
    engine_ = std::make_unique<offload::OffloadEngine>(ftl_, log_, config_.key, config_.offload);
    ftl_.set_reclaim_hook([this] { return engine_->step(ftl_.now()); });
  }
}

void Device::attach_vault(offload::VaultTransport* transport) {
  if (engine_) engine_->set_transport(transport);
}

void Device::maintenance() {
  auto guard = ftl_.lock();
  if (engine_) {
    if (engine_->should_offload()) engine_->step(ftl_.now());
    // GC is due: ship retained pages first so their blocks become reclaimable.
    while (ftl_.free_fraction() < config_.ftl.gc.free_watermark && ftl_.has_claimable_retained() &&
           engine_->step(ftl_.now())) {
    }
  }
  ftl_.garbage_collect();
}

Seq Device::write(Lpa lpa, ByteView data, SimTime now) {
  auto guard = ftl_.lock();
  Seq seq = ftl_.write(lpa, data, now);
  maintenance();
  return seq;
}

Seq Device::trim(Lpa start, std::uint64_t count, SimTime now) {
  auto guard = ftl_.lock();
  Seq seq = ftl_.trim(start, count, now);
  maintenance();
  return seq;
}

std::optional<Bytes> Device::read(Lpa lpa, SimTime now) {
  auto guard = ftl_.lock();
  return ftl_.read(lpa, now);
}

bool Device::sync_offload() {
  auto guard = ftl_.lock();
  return engine_ && engine_->drain(ftl_.now());
}

ftl::GcReport Device::force_gc() { return ftl_.force_garbage_collect(); }

DeviceCounters Device::counters() const {
  auto wear = nand_.wear_report();
  DeviceCounters c;
  c.flash_reads = wear.total_reads;
  c.flash_programs = wear.total_programs;
  c.flash_erases = wear.total_erases;
  c.log_bytes = log_.bytes_logged();
  std::uint64_t ps = config_.ftl.geometry.page_size;
  c.log_pages = (c.log_bytes + ps - 1) / ps;
  c.busy_time = c.flash_reads * config_.cost.read + (c.flash_programs + c.log_pages) * config_.cost.program +
                c.flash_erases * config_.cost.erase;
  return c;
}

}  // namespace rssd::device
