#include "rssd/common/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "rssd/common/codec.hpp"
#include "rssd/common/error.hpp"

namespace rssd::net {

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Endpoint Endpoint::parse(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::ConfigError, "endpoint must be host:port: " + text);
  Endpoint e;
  e.host = text.substr(0, colon);
  try {
    auto port = std::stoul(text.substr(colon + 1));
    if (port > 65535) throw std::out_of_range("port");
    e.port = static_cast<std::uint16_t>(port);
  } catch (const std::logic_error&) {
    throw Error(Errc::ConfigError, "bad port in endpoint: " + text);
  }
  if (e.host.empty()) throw Error(Errc::ConfigError, "empty host in endpoint: " + text);
  return e;
}

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

namespace {

std::optional<sockaddr_in> resolve(const Endpoint& endpoint) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(endpoint.port);
  if (inet_pton(AF_INET, endpoint.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(endpoint.host.c_str(), nullptr, &hints, &res) != 0 || !res) return std::nullopt;
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

bool write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    ssize_t k = ::send(fd, p, n, MSG_NOSIGNAL);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) return false;
    p += k;
    n -= static_cast<std::size_t>(k);
  }
  return true;
}

bool read_all(int fd, std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    ssize_t k = ::recv(fd, p, n, 0);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) return false;
    p += k;
    n -= static_cast<std::size_t>(k);
  }
  return true;
}

}  // namespace

std::optional<Socket> connect_to(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
  auto addr = resolve(endpoint);
  if (!addr) return std::nullopt;
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) return std::nullopt;
  int flags = fcntl(s.fd(), F_GETFL, 0);
  fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(s.fd(), reinterpret_cast<sockaddr*>(&*addr), sizeof(*addr));
  if (rc != 0) {
    if (errno != EINPROGRESS) return std::nullopt;
    pollfd pfd{s.fd(), POLLOUT, 0};
    if (::poll(&pfd, 1, static_cast<int>(timeout.count())) != 1) return std::nullopt;
    int err = 0;
    socklen_t len = sizeof(err);
    getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) return std::nullopt;
  }
  fcntl(s.fd(), F_SETFL, flags);
  int one = 1;
  setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

Socket listen_on(const Endpoint& endpoint, std::uint16_t* bound_port) {
  auto addr = resolve(endpoint);
  if (!addr) throw Error(Errc::BindFailed, "cannot resolve " + endpoint.host);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw Error(Errc::BindFailed, std::strerror(errno));
  int one = 1;
  setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&*addr), sizeof(*addr)) != 0) {
    throw Error(Errc::BindFailed, endpoint.to_string() + ": " + std::strerror(errno));
  }
  if (::listen(s.fd(), 64) != 0) throw Error(Errc::BindFailed, std::strerror(errno));
  if (bound_port) {
    sockaddr_in actual{};
    socklen_t len = sizeof(actual);
    getsockname(s.fd(), reinterpret_cast<sockaddr*>(&actual), &len);
    *bound_port = ntohs(actual.sin_port);
  }
  return s;
}

void set_io_timeout(const Socket& socket, std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  setsockopt(socket.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  setsockopt(socket.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

bool send_message(const Socket& socket, ByteView payload) {
  if (payload.size() > kMaxMessageSize) return false;
  std::uint8_t prefix[4];
  store_be32(prefix, static_cast<std::uint32_t>(payload.size()));
  return write_all(socket.fd(), prefix, 4) && write_all(socket.fd(), payload.data(), payload.size());
}

std::optional<Bytes> recv_message(const Socket& socket) {
  std::uint8_t prefix[4];
  if (!read_all(socket.fd(), prefix, 4)) return std::nullopt;
  auto size = load_be32(prefix);
  if (size > kMaxMessageSize) return std::nullopt;
  Bytes out(size);
  if (size > 0 && !read_all(socket.fd(), out.data(), size)) return std::nullopt;
  return out;
}

}  // namespace rssd::net
