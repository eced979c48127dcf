#pragma once

#include <chrono>
#include <optional>

#include "rssd/common/net.hpp"
#include "rssd/offload/protocol.hpp"

namespace rssd::offload {

/// Length-prefixed frames over a TCP connection; reconnects lazily.
class TcpTransport : public VaultTransport {
 public:
  explicit TcpTransport(net::Endpoint endpoint,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

  Reply send(ByteView frame) override;

 private:
  net::Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  std::optional<net::Socket> socket_;
};

}  // namespace rssd::offload
