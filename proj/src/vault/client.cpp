#include "rssd/vault/client.hpp"

#include "rssd/common/codec.hpp"
#include "rssd/common/error.hpp"
#include "rssd/vault/protocol.hpp"

namespace rssd::vault {

namespace {

Bytes query_header(QueryOp op) {
  Bytes out(kQueryMagic, kQueryMagic + 4);
  out.push_back(static_cast<std::uint8_t>(op));
  return out;
}

}  // namespace

VaultClient::VaultClient(net::Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

Bytes VaultClient::call(const Bytes& request) {
  std::lock_guard lock(mutex_);
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (!socket_) {
      socket_ = net::connect_to(endpoint_, timeout_);
      if (!socket_) break;
      net::set_io_timeout(*socket_, timeout_);
    }
    if (net::send_message(*socket_, request)) {
      if (auto reply = net::recv_message(*socket_)) {
        ByteReader r(*reply);
        auto status = r.u8();
        if (status == kStatusQueryOk) return Bytes(reply->begin() + 1, reply->end());
        if (status == kStatusQueryError) {
          auto code = static_cast<Errc>(r.u8());
          bool has_detail = r.u8() != 0;
          auto detail = r.u64();
          auto message = r.str();
          throw Error(code, "vault: " + message,
                      has_detail ? std::optional<std::uint64_t>(detail) : std::nullopt);
        }
        throw Error(Errc::MalformedFrame, "unexpected reply status from vault");
      }
    }
    socket_.reset();
  }
  throw Error(Errc::VaultUnreachable, "vault at " + endpoint_.to_string() + " is unreachable");
}

VaultStatus VaultClient::status() {
  auto body = call(query_header(QueryOp::Status));
  ByteReader r(body);
  VaultStatus s;
  s.last_segment_id = r.u64();
  s.last_seq = r.u64();
  s.last_tail_hash = r.digest();
  s.segments = r.u64();
  s.stored_bytes = r.u64();
  s.page_records = r.u64();
  s.damaged_segment = r.u64();
  return s;
}

std::vector<VersionRecord> VaultClient::query_versions(Lpa lpa, SimTime lo, SimTime hi) {
  auto req = query_header(QueryOp::Versions);
  ByteWriter w(req);
  w.u64(lpa);
  w.u64(lo);
  w.u64(hi);
  auto body = call(req);
  ByteReader r(body);
  auto n = r.u32();
  if (std::uint64_t{n} * 28 > r.remaining()) throw Error(Errc::MalformedFrame, "version count");
  std::vector<VersionRecord> out(n);
  for (auto& v : out) {
    v.write_seq = r.u64();
    v.timestamp = r.u64();
    v.segment_id = r.u64();
    v.record_index = r.u32();
  }
  return out;
}

std::vector<VaultEvent> VaultClient::history(Lpa lpa) {
  auto req = query_header(QueryOp::History);
  ByteWriter w(req);
  w.u64(lpa);
  auto body = call(req);
  ByteReader r(body);
  auto n = r.u32();
  if (std::uint64_t{n} * 61 > r.remaining()) throw Error(Errc::MalformedFrame, "history count");
  std::vector<VaultEvent> out(n);
  for (auto& e : out) {
    e.seq = r.u64();
    e.timestamp = r.u64();
    e.kind = static_cast<EventKind>(r.u8());
    e.digest = r.digest();
    e.segment_id = r.u64();
    e.record_index = r.u32();
  }
  return out;
}

FetchedPage VaultClient::fetch_page(std::uint64_t segment_id, std::uint32_t record_index) {
  auto req = query_header(QueryOp::Fetch);
  ByteWriter w(req);
  w.u64(segment_id);
  w.u32(record_index);
  auto body = call(req);
  ByteReader r(body);
  FetchedPage page;
  page.lpa = r.u64();
  page.write_seq = r.u64();
  auto len = r.u32();
  auto data = r.raw(len);
  page.data.assign(data.begin(), data.end());
  return page;
}

DetectionReport VaultClient::run_detector(const std::string& name, Seq lo, Seq hi) {
  auto req = query_header(QueryOp::Detect);
  ByteWriter w(req);
  w.str(name);
  w.u64(lo);
  w.u64(hi);
  auto body = call(req);
  ByteReader r(body);
  DetectionReport report;
  report.detector = name;
  report.suspicious = r.u8() != 0;
  report.summary = r.str();
  auto n = r.u32();
  if (std::uint64_t{n} * 8 > r.remaining()) throw Error(Errc::MalformedFrame, "evidence count");
  report.evidence.resize(n);
  for (auto& seq : report.evidence) seq = r.u64();
  return report;
}

LogAudit VaultClient::audit_log(Seq lo, Seq hi) {
  auto req = query_header(QueryOp::Audit);
  ByteWriter w(req);
  w.u64(lo);
  w.u64(hi);
  auto body = call(req);
  ByteReader r(body);
  LogAudit audit;
  bool tampered = r.u8() != 0;
  auto tamper_seq = r.u64();
  if (tampered) audit.tamper_at = tamper_seq;
  audit.head_hash = r.digest();
  audit.last_seq = r.u64();
  audit.tail_hash = r.digest();
  auto n = r.u32();
  if (std::uint64_t{n} * oplog::kEntryWireSize > r.remaining()) {
    throw Error(Errc::MalformedFrame, "audit entry count");
  }
  audit.entries.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto e = oplog::decode_entry(r.raw(oplog::kEntryWireSize));
    if (!e) throw Error(Errc::MalformedFrame, "non-canonical entry in audit reply");
    audit.entries.push_back(*e);
  }
  return audit;
}

}  // namespace rssd::vault
