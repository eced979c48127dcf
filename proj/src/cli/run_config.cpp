#include "rssd/cli/run_config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rssd/common/error.hpp"

namespace rssd::cli {

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw Error(Errc::ConfigError, std::string(key) + ": '" + std::string(value) + "' " + std::string(why));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) bad(key, v, "is not a non-negative integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    bad(key, v, "is not a number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  bad(key, v, "is not a boolean (true/false)");
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc{} ? p : buf);
}

// Accessor-based field constructors; the accessor returns a reference to
// the member so one lambda serves both directions.
template <typename Access>
ConfigField field(std::string name, std::string help, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<RunConfig&>()))>;
  ConfigField f;
  f.name = name;
  f.help = std::move(help);
  f.set = [access, name](RunConfig& c, std::string_view v) {
    if constexpr (std::is_same_v<T, bool>) {
      access(c) = parse_bool(name, v);
    } else if constexpr (std::is_same_v<T, double>) {
      access(c) = parse_double(name, v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      access(c) = std::string(v);
    } else {
      access(c) = parse_int<T>(name, v);
    }
  };
  f.get = [access](const RunConfig& c) -> std::string {
    auto& value = access(const_cast<RunConfig&>(c));
    if constexpr (std::is_same_v<T, bool>) {
      return value ? "true" : "false";
    } else if constexpr (std::is_same_v<T, double>) {
      return format_double(value);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return value;
    } else {
      return std::to_string(value);
    }
  };
  return f;
}

#define RSSD_FIELD(name, help) field(#name, help, [](RunConfig& c) -> auto& { return c.name; })

std::vector<ConfigField> make_fields() {
  return {
      field("channels", "flash channels", [](RunConfig& c) -> auto& { return c.geometry.channels; }),
      field("chips", "chips per channel", [](RunConfig& c) -> auto& { return c.geometry.chips_per_channel; }),
      field("blocks", "blocks per chip", [](RunConfig& c) -> auto& { return c.geometry.blocks_per_chip; }),
      field("pages", "pages per block", [](RunConfig& c) -> auto& { return c.geometry.pages_per_block; }),
      field("page_size", "bytes per page (power of two >= 16)",
            [](RunConfig& c) -> auto& { return c.geometry.page_size; }),
      RSSD_FIELD(over_provisioning, "share of physical pages hidden from the host"),
      RSSD_FIELD(gc_watermark, "GC when the free share drops below this"),
      RSSD_FIELD(offload_watermark, "offload when the retained share exceeds this"),
      RSSD_FIELD(retention, "retain stale and trimmed versions (false: conventional FTL)"),
      RSSD_FIELD(logging, "hash-chained operation log"),
      RSSD_FIELD(offload_pages, "pages per offload segment"),
      RSSD_FIELD(seal_entries, "log entries per sealed log segment"),
      RSSD_FIELD(vault, "local | none | host:port"),
      RSSD_FIELD(key_file, "device key file (64 hex chars); empty derives one from the seed"),
      RSSD_FIELD(vault_fsync, "fsync segment files of the local vault"),
      RSSD_FIELD(trace, "trace file to replay; empty generates a benign workload"),
      RSSD_FIELD(ops, "generated workload: records"),
      RSSD_FIELD(lpa_space, "generated workload: lpas used, 0 for the whole capacity"),
      RSSD_FIELD(ops_per_second, "generated workload: arrival rate"),
      RSSD_FIELD(read_fraction, "generated workload: share of reads"),
      RSSD_FIELD(trim_fraction, "generated workload: share of trims"),
      RSSD_FIELD(hot_lpas, "generated workload: hot set size"),
      RSSD_FIELD(speed, "replay speed factor"),
      RSSD_FIELD(checkpoint_every, "records between throughput samples and retention checks"),
      RSSD_FIELD(attack, "gc | timing | trimming"),
      RSSD_FIELD(prefill, "share of logical capacity written before the attack"),
      RSSD_FIELD(victim_fraction, "share of mapped lpas the attack encrypts"),
      RSSD_FIELD(fill_fraction, "gc attack: occupied share after the flood"),
      RSSD_FIELD(attack_rate, "timing attack: encryptions per minute"),
      RSSD_FIELD(write_rate, "attacker pages per second"),
      RSSD_FIELD(pressure_pages, "gc attack: overwrites after the flood, 0 for half the capacity"),
      RSSD_FIELD(in_place, "trimming attack: overwrite victims instead of copying"),
      RSSD_FIELD(days, "retention: simulated days"),
      RSSD_FIELD(daily_writes, "retention: capacity multiples written per day"),
      RSSD_FIELD(verify_lpas, "retention: lpas checked per day, 0 for all"),
      RSSD_FIELD(seed, "seed for every generated workload"),
      RSSD_FIELD(out, "output directory"),
  };
}

#undef RSSD_FIELD

const ConfigField& find_field(std::string_view key) {
  for (const auto& f : config_fields()) {
    if (f.name == key) return f;
  }
  throw Error(Errc::ConfigError, "unknown config key '" + std::string(key) + "'");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ConfigError, what);
}

}  // namespace

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = make_fields();
  return fields;
}

void RunConfig::set(std::string_view key, std::string_view value) { find_field(key).set(*this, trim(value)); }

std::string RunConfig::get(std::string_view key) const { return find_field(key).get(*this); }

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config file " + path.string());
  std::string line;
  std::uint64_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::ConfigError, path.string() + ":" + std::to_string(number) + ": expected key = value",
                  number);
    }
    try {
      set(trim(s.substr(0, eq)), s.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(Errc::ConfigError, path.string() + ":" + std::to_string(number) + ": " + e.what(), number);
    }
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : config_fields()) out += f.name + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  f << to_text();
  if (!f) throw Error(Errc::StorageFailure, "cannot write " + path.string());
}

void RunConfig::validate() const {
  device_config().validate();
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  require(unit(gc_watermark) && unit(offload_watermark), "watermarks must lie in [0, 1]");
  require(speed > 0.0, "speed must be > 0");
  require(ops_per_second > 0.0, "ops_per_second must be > 0");
  require(unit(read_fraction) && unit(trim_fraction) && read_fraction + trim_fraction <= 1.0,
          "read_fraction + trim_fraction must lie in [0, 1]");
  require(unit(prefill) && unit(victim_fraction) && unit(fill_fraction),
          "prefill, victim_fraction and fill_fraction must lie in [0, 1]");
  require(attack_rate >= 0.0, "attack_rate must be >= 0");
  require(write_rate > 0.0, "write_rate must be > 0");
  require(daily_writes >= 0.0, "daily_writes must be >= 0");
  require(!out.empty(), "out must name a directory");
  require(harness::parse_attack(attack).has_value(), "unknown attack '" + attack + "' (gc, timing, trimming)");
  auto mode = vault_mode();
  if (mode == VaultMode::Remote) {
    vault_endpoint();
    require(!key_file.empty(), "a remote vault needs key_file (the key the vault was started with)");
  }
  if (!key_file.empty()) {
    try {
      DeviceKey::load(key_file);
    } catch (const Error& e) {
      throw Error(Errc::ConfigError, std::string("key_file: ") + e.what());
    }
  }
  auto logical = device_config().ftl.logical_pages();
  require(lpa_space <= logical, "lpa_space " + std::to_string(lpa_space) + " exceeds the logical capacity " +
                                    std::to_string(logical));
  if (!trace.empty()) require(std::filesystem::exists(trace), "trace file " + trace + " does not exist");
}

VaultMode RunConfig::vault_mode() const {
  if (vault == "local") return VaultMode::Local;
  if (vault == "none") return VaultMode::Disabled;
  return VaultMode::Remote;
}

net::Endpoint RunConfig::vault_endpoint() const {
  try {
    return net::Endpoint::parse(vault);
  } catch (const Error&) {
    throw Error(Errc::ConfigError, "vault: '" + vault + "' is not local, none or host:port");
  }
}

DeviceKey RunConfig::device_key() const {
  if (!key_file.empty()) return DeviceKey::load(key_file);
  // Simulation convenience: a seed-derived key keeps local runs reproducible.
  std::string material = "rssd run key " + std::to_string(seed);
  auto d = sha256(ByteView(reinterpret_cast<const std::uint8_t*>(material.data()), material.size()));
  DeviceKey key;
  std::copy(d.begin(), d.end(), key.bytes.begin());
  return key;
}

device::DeviceConfig RunConfig::device_config() const {
  device::DeviceConfig c;
  c.ftl.geometry = geometry;
  c.ftl.over_provisioning = over_provisioning;
  c.ftl.gc.free_watermark = gc_watermark;
  c.ftl.gc.offload_watermark = offload_watermark;
  c.ftl.retention = retention;
  c.logging = logging;
  c.offload.max_pages = offload_pages;
  c.seal.max_entries = seal_entries;
  return c;
}

harness::AttackKind RunConfig::attack_kind() const {
  auto kind = harness::parse_attack(attack);
  if (!kind) throw Error(Errc::ConfigError, "unknown attack '" + attack + "' (gc, timing, trimming)");
  return *kind;
}

harness::AttackParams RunConfig::attack_params() const {
  harness::AttackParams p;
  p.victim_fraction = victim_fraction;
  p.fill_fraction = fill_fraction;
  p.write_rate_pages_per_s = write_rate;
  p.pressure_pages = pressure_pages;
  p.ops_per_minute = attack_rate;
  p.in_place = in_place;
  p.seed = seed;
  return p;
}

harness::BenignParams RunConfig::benign_params(std::uint64_t logical_pages) const {
  harness::BenignParams p;
  p.ops = ops;
  p.lpa_space = lpa_space == 0 ? logical_pages : lpa_space;
  p.read_fraction = read_fraction;
  p.trim_fraction = trim_fraction;
  p.hot_lpas = std::min(hot_lpas, p.lpa_space);
  p.ops_per_second = ops_per_second;
  p.seed = seed;
  return p;
}

}  // namespace rssd::cli
