#pragma once

#include <atomic>
#include <list>
#include <mutex>
#include <thread>

#include "rssd/common/net.hpp"
#include "rssd/vault/store.hpp"

namespace rssd::vault {

/// Answers one request payload (frame or query) against a store.
Bytes handle_request(VaultStore& store, ByteView request);

/// TCP front end: one thread per connection, requests on a connection are
/// answered in order.
class VaultServer {
 public:
  /// Binds immediately; throws Error(BindFailed).
  VaultServer(VaultStore& store, const net::Endpoint& endpoint);
  ~VaultServer();
  VaultServer(const VaultServer&) = delete;
  VaultServer& operator=(const VaultServer&) = delete;

  std::uint16_t port() const { return port_; }
  net::Endpoint endpoint() const { return net::Endpoint{host_, port_}; }

  /// Starts accepting on a background thread.
  void start();
  /// Accepts on the calling thread until stop() is called.
  void serve_forever();
  void stop();

 private:
  void accept_loop();
  void serve_connection(int fd);

  VaultStore& store_;
  std::string host_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex workers_mutex_;
  std::list<std::thread> workers_;
  std::list<int> connections_;
};

}  // namespace rssd::vault
