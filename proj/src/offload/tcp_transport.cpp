#include "rssd/offload/tcp_transport.hpp"

#include "rssd/common/error.hpp"

namespace rssd::offload {

TcpTransport::TcpTransport(net::Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

Reply TcpTransport::send(ByteView frame) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (!socket_) {
      socket_ = net::connect_to(endpoint_, timeout_);
      if (!socket_) return Reply::unreachable();
      net::set_io_timeout(*socket_, timeout_);
    }
    if (net::send_message(*socket_, frame)) {
      if (auto bytes = net::recv_message(*socket_)) {
        try {
          return decode_reply(*bytes);
        } catch (const Error&) {
          socket_.reset();
          return Reply::unreachable();
        }
      }
    }
    // A stale connection fails on first use; retry once on a fresh one.
    socket_.reset();
  }
  return Reply::unreachable();
}

}  // namespace rssd::offload
