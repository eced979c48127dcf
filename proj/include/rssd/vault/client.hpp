#pragma once

#include <chrono>
#include <mutex>
#include <optional>

#include "rssd/common/net.hpp"
#include "rssd/vault/query.hpp"

namespace rssd::vault {

/// Query client for a remote vault. Connection failures throw
/// Error(VaultUnreachable); errors raised by the vault are rethrown with
/// their original code and detail.
class VaultClient : public VaultQuery {
 public:
  explicit VaultClient(net::Endpoint endpoint,
                       std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

  VaultStatus status() override;
  std::vector<VersionRecord> query_versions(Lpa lpa, SimTime lo, SimTime hi) override;
  std::vector<VaultEvent> history(Lpa lpa) override;
  FetchedPage fetch_page(std::uint64_t segment_id, std::uint32_t record_index) override;
  DetectionReport run_detector(const std::string& name, Seq lo, Seq hi) override;
  LogAudit audit_log(Seq lo, Seq hi) override;

 private:
  Bytes call(const Bytes& request);

  net::Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  std::optional<net::Socket> socket_;
};

}  // namespace rssd::vault
