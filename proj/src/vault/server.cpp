#include "rssd/vault/server.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "rssd/common/codec.hpp"
#include "rssd/common/error.hpp"
#include "rssd/offload/segment.hpp"
#include "rssd/vault/protocol.hpp"

namespace rssd::vault {

namespace {

Bytes query_error(const Error& e) {
  Bytes out;
  ByteWriter w(out);
  w.u8(kStatusQueryError);
  w.u8(static_cast<std::uint8_t>(e.code()));
  w.u8(e.detail() ? 1 : 0);
  w.u64(e.detail().value_or(0));
  w.str(e.what());
  return out;
}

Bytes handle_query(VaultStore& store, ByteReader& r) {
  Bytes out;
  ByteWriter w(out);
  w.u8(kStatusQueryOk);
  auto op = static_cast<QueryOp>(r.u8());
  switch (op) {
    case QueryOp::Status: {
      auto s = store.status();
      w.u64(s.last_segment_id);
      w.u64(s.last_seq);
      w.digest(s.last_tail_hash);
      w.u64(s.segments);
      w.u64(s.stored_bytes);
      w.u64(s.page_records);
      w.u64(s.damaged_segment);
      break;
    }
    case QueryOp::Versions: {
      auto lpa = r.u64();
      auto lo = r.u64();
      auto hi = r.u64();
      auto versions = store.query_versions(lpa, lo, hi);
      w.u32(static_cast<std::uint32_t>(versions.size()));
      for (const auto& v : versions) {
        w.u64(v.write_seq);
        w.u64(v.timestamp);
        w.u64(v.segment_id);
        w.u32(v.record_index);
      }
      break;
    }
    case QueryOp::History: {
      auto events = store.history(r.u64());
      w.u32(static_cast<std::uint32_t>(events.size()));
      for (const auto& e : events) {
        w.u64(e.seq);
        w.u64(e.timestamp);
        w.u8(static_cast<std::uint8_t>(e.kind));
        w.digest(e.digest);
        w.u64(e.segment_id);
        w.u32(e.record_index);
      }
      break;
    }
    case QueryOp::Fetch: {
      auto segment_id = r.u64();
      auto index = r.u32();
      auto page = store.fetch_page(segment_id, index);
      w.u64(page.lpa);
      w.u64(page.write_seq);
      w.u32(static_cast<std::uint32_t>(page.data.size()));
      w.raw(page.data);
      break;
    }
    case QueryOp::Detect: {
      auto name = r.str();
      auto lo = r.u64();
      auto hi = r.u64();
      auto report = store.run_detector(name, lo, hi);
      w.u8(report.suspicious ? 1 : 0);
      w.str(report.summary);
      w.u32(static_cast<std::uint32_t>(report.evidence.size()));
      for (auto seq : report.evidence) w.u64(seq);
      break;
    }
    case QueryOp::Audit: {
      auto lo = r.u64();
      auto hi = r.u64();
      auto audit = store.audit_log(lo, hi);
      w.u8(audit.tamper_at ? 1 : 0);
      w.u64(audit.tamper_at.value_or(0));
      w.digest(audit.head_hash);
      w.u64(audit.last_seq);
      w.digest(audit.tail_hash);
      w.u32(static_cast<std::uint32_t>(audit.entries.size()));
      for (const auto& e : audit.entries) w.raw(oplog::encode_entry(e));
      break;
    }
    default:
      throw Error(Errc::MalformedFrame, "unknown query opcode");
  }
  return out;
}

}  // namespace

Bytes handle_request(VaultStore& store, ByteView request) {
  if (request.size() >= 4 && std::memcmp(request.data(), offload::kFrameMagic, 4) == 0) {
    return offload::encode_reply(store.ingest(request));
  }
  try {
    if (request.size() < 5 || std::memcmp(request.data(), kQueryMagic, 4) != 0) {
      return offload::encode_reply(offload::Reply::nack(offload::NackReason::Malformed));
    }
    ByteReader r(request.subspan(4));
    return handle_query(store, r);
  } catch (const Error& e) {
    return query_error(e);
  } catch (const std::exception& e) {
    return query_error(Error(Errc::Internal, e.what()));
  }
}

VaultServer::VaultServer(VaultStore& store, const net::Endpoint& endpoint)
    : store_(store), host_(endpoint.host) {
  listener_ = net::listen_on(endpoint, &port_);
}

VaultServer::~VaultServer() { stop(); }

void VaultServer::start() { acceptor_ = std::thread([this] { accept_loop(); }); }

void VaultServer::serve_forever() { accept_loop(); }

void VaultServer::accept_loop() {
  while (!stopping_) {
    int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (stopping_) break;
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    std::lock_guard lock(workers_mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    connections_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void VaultServer::serve_connection(int fd) {
  net::Socket socket(fd);
  while (!stopping_) {
    auto request = net::recv_message(socket);
    if (!request) break;
    Bytes reply = handle_request(store_, *request);
    if (!net::send_message(socket, reply)) break;
  }
  std::lock_guard lock(workers_mutex_);
  connections_.remove(fd);
  // The Socket destructor closes fd after it leaves the list, so stop()
  // never shuts down a recycled descriptor.
  socket.close();
}

void VaultServer::stop() {
  if (stopping_.exchange(true)) {
    if (acceptor_.joinable()) acceptor_.join();
    return;
  }
  ::shutdown(listener_.fd(), SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::thread> workers;
  {
    std::lock_guard lock(workers_mutex_);
    for (int fd : connections_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  listener_.close();
}

}  // namespace rssd::vault
