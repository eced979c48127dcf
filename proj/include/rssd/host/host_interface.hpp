#pragma once

#include <cstdint>
#include <optional>

#include "rssd/common/types.hpp"

namespace rssd::host {

/// The block command surface a host (benign or malicious) can reach.
///
/// This is the only device surface exposed to host-side code. Offload,
/// log internals and the device key sit behind it.
class HostInterface {
 public:
  virtual ~HostInterface() = default;

  /// Writes one page. Returns the sequence number of the logged write.
  /// Throws Error(CapacityExhausted) when the device refuses to drop
  /// retained data to make room.
  virtual Seq write(Lpa lpa, ByteView data, SimTime now) = 0;

  /// Trims [start, start + count).
  virtual Seq trim(Lpa start, std::uint64_t count, SimTime now) = 0;

  /// Current contents, or nullopt for an unmapped (never written or
  /// trimmed) page.
  virtual std::optional<Bytes> read(Lpa lpa, SimTime now) = 0;

  virtual std::uint64_t logical_pages() const = 0;
  virtual std::uint32_t page_size() const = 0;
};

}  // namespace rssd::host
