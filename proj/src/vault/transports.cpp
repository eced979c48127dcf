#include "rssd/vault/transports.hpp"

namespace rssd::vault {

FaultyTransport::FaultyTransport(offload::VaultTransport& inner, Faults faults)
    : inner_(inner), faults_(faults), rng_(faults.seed) {}

bool FaultyTransport::roll(double p) {
  if (p <= 0.0) return false;
  double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return u < p;
}

offload::Reply FaultyTransport::send(ByteView frame) {
  if (faults_.down || roll(faults_.drop_request)) return offload::Reply::unreachable();
  Bytes substituted;
  if (mutate) {
    substituted = mutate(frame);
    frame = substituted;
  }
  ++delivered_;
  auto reply = inner_.send(frame);
  if (roll(faults_.duplicate)) {
    ++delivered_;
    reply = inner_.send(frame);
  }
  if (roll(faults_.drop_reply)) return offload::Reply::unreachable();
  return reply;
}

}  // namespace rssd::vault
