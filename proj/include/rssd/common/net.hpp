#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "rssd/common/types.hpp"

namespace rssd::net {

/// Owning wrapper around a socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close();

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// Parses "host:port".
  static Endpoint parse(const std::string& text);
  std::string to_string() const;
};

/// Upper bound on one message; larger prefixes are treated as malformed.
inline constexpr std::uint32_t kMaxMessageSize = 256u << 20;

/// Connects with a timeout; nullopt if the peer cannot be reached.
std::optional<Socket> connect_to(const Endpoint& endpoint, std::chrono::milliseconds timeout);

/// Binds and listens. Throws Error(BindFailed). Port 0 picks an ephemeral
/// port; the bound port is written to *bound_port.
Socket listen_on(const Endpoint& endpoint, std::uint16_t* bound_port);

/// Sets send and receive timeouts on a connected socket.
void set_io_timeout(const Socket& socket, std::chrono::milliseconds timeout);

/// Writes a u32 big-endian length prefix followed by the payload.
bool send_message(const Socket& socket, ByteView payload);
/// Reads one length-prefixed message; nullopt on EOF, timeout or an
/// oversized prefix.
std::optional<Bytes> recv_message(const Socket& socket);

}  // namespace rssd::net
