#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "rssd/offload/protocol.hpp"
#include "rssd/vault/store.hpp"

namespace rssd::vault {

/// Delivers frames straight to a store in the same process.
class InProcessTransport : public offload::VaultTransport {
 public:
  explicit InProcessTransport(VaultStore& store) : store_(store) {}
  offload::Reply send(ByteView frame) override { return store_.ingest(frame); }

 private:
  VaultStore& store_;
};

/// Wraps a transport and injects link faults.
class FaultyTransport : public offload::VaultTransport {
 public:
  struct Faults {
    bool down = false;                 // every send is Unreachable
    double drop_request = 0.0;         // frame lost before the vault sees it
    double drop_reply = 0.0;           // vault ingests, device sees Unreachable
    double duplicate = 0.0;            // frame delivered twice
    std::uint64_t seed = 1;
  };

  FaultyTransport(offload::VaultTransport& inner, Faults faults);

  offload::Reply send(ByteView frame) override;

  Faults& faults() { return faults_; }
  std::uint64_t delivered() const { return delivered_; }
  /// Optional hook that may substitute the frame actually delivered.
  std::function<Bytes(ByteView)> mutate;

 private:
  bool roll(double p);

  offload::VaultTransport& inner_;
  Faults faults_;
  std::mt19937_64 rng_;
  std::uint64_t delivered_ = 0;
};

}  // namespace rssd::vault
