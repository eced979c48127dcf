#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "rssd/common/crypto.hpp"
#include "rssd/common/net.hpp"
#include "rssd/device/device.hpp"
#include "rssd/harness/attacks.hpp"
#include "rssd/harness/trace.hpp"

namespace rssd::cli {

enum class VaultMode : std::uint8_t { Local, Remote, Disabled };

/// Everything a simulate, attack or retention run depends on. A run is
/// reproducible from this record alone; it is archived as config.txt in
/// the run's output directory.
struct RunConfig {
  nand::Geometry geometry = nand::Geometry::desk_scale();
  double over_provisioning = 0.20;
  double gc_watermark = 0.20;
  double offload_watermark = 0.30;
  bool retention = true;
  bool logging = true;
  std::uint64_t offload_pages = 256;
  std::uint64_t seal_entries = 1024;

  /// "local" (in-process store under <out>/vault), "none", or host:port.
  std::string vault = "local";
  /// Empty: a key derived from the seed (local vault only).
  std::string key_file;
  bool vault_fsync = false;

  /// Empty: a generated benign workload.
  std::string trace;
  std::uint64_t ops = 20000;
  std::uint64_t lpa_space = 0;  // 0: the whole logical capacity
  double ops_per_second = 4.0;
  double read_fraction = 0.30;
  double trim_fraction = 0.03;
  std::uint64_t hot_lpas = 16;
  double speed = 1.0;
  std::uint64_t checkpoint_every = 1000;

  std::string attack = "gc";
  double prefill = 0.5;  // share of logical capacity written before an attack
  double victim_fraction = 0.25;
  double fill_fraction = 0.95;
  double attack_rate = 10.0;  // timing attack, ops per minute
  double write_rate = 200.0;  // attacker pages per second
  std::uint64_t pressure_pages = 0;
  bool in_place = false;

  std::uint64_t days = 200;
  double daily_writes = 2.0;      // multiples of the logical capacity per day
  std::uint64_t verify_lpas = 0;  // retention check sample, 0: every lpa

  std::uint64_t seed = 1;
  std::string out = "run";

  /// Sets one field from its textual form; throws Error(ConfigError).
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  /// Applies "key = value" lines; '#' starts a comment. Throws
  /// Error(ConfigError) with the 1-based line number as detail.
  void apply_file(const std::filesystem::path& path);
  /// Every field as "key = value" lines, in declaration order.
  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

  /// Throws Error(ConfigError) naming the first bad field.
  void validate() const;

  VaultMode vault_mode() const;
  net::Endpoint vault_endpoint() const;
  DeviceKey device_key() const;
  device::DeviceConfig device_config() const;
  harness::AttackKind attack_kind() const;
  harness::AttackParams attack_params() const;
  harness::BenignParams benign_params(std::uint64_t logical_pages) const;
  std::filesystem::path out_dir() const { return out; }
};

struct ConfigField {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigField>& config_fields();

}  // namespace rssd::cli
