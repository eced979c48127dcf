#pragma once

#include <memory>

#include "rssd/device/device.hpp"
#include "rssd/vault/store.hpp"
#include "rssd/vault/transports.hpp"
#include "support.hpp"

namespace rssd::testing {

inline DeviceKey test_key() { return DeviceKey::from_hex(std::string(64, '7')); }

/// Small device wired to an in-process vault in a temporary directory.
struct DeviceRig {
  TempDir dir;
  std::unique_ptr<vault::VaultStore> store;
  std::unique_ptr<vault::InProcessTransport> transport;
  std::unique_ptr<device::Device> device;

  static device::DeviceConfig small_config(nand::Geometry g = {1, 1, 16, 8, 64}) {
    device::DeviceConfig c;
    c.ftl.geometry = g;
    c.key = test_key();
    c.offload.max_pages = 16;
    c.seal.max_entries = 64;
    return c;
  }

  explicit DeviceRig(device::DeviceConfig config = small_config(), bool with_vault = true) {
    device = std::make_unique<device::Device>(config);
    if (with_vault) {
      store = std::make_unique<vault::VaultStore>(vault::VaultOptions{dir.path() / "vault", config.key, false});
      transport = std::make_unique<vault::InProcessTransport>(*store);
      device->attach_vault(transport.get());
    }
  }
};

}  // namespace rssd::testing
