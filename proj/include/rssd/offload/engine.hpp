#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "rssd/common/crypto.hpp"
#include "rssd/ftl/ftl.hpp"
#include "rssd/offload/protocol.hpp"
#include "rssd/offload/segment.hpp"
#include "rssd/oplog/op_log.hpp"

namespace rssd::offload {

struct OffloadConfig {
  std::size_t max_pages = 256;
  Compression compression = Compression::Zlib;
  SimTime backoff_initial = 1 * kNanosPerSecond;
  SimTime backoff_cap = 60 * kNanosPerSecond;
  /// Ship logs even without retained pages once this many sealed log
  /// segments are waiting.
  std::size_t log_segment_backlog = 4;
};

struct OffloadStats {
  std::uint64_t segments_built = 0;
  std::uint64_t segments_acked = 0;
  std::uint64_t pages_acked = 0;
  std::uint64_t frames_sent = 0;
  std::uint64_t frame_bytes_sent = 0;
  std::uint64_t plaintext_bytes = 0;
  std::uint64_t nacks = 0;
  std::uint64_t unreachable = 0;
  std::uint64_t out_of_order_resends = 0;
};

/// Bundles retained pages and sealed log segments into frames and drives
/// OffloadPending -> SafeToErase on acknowledgment.
///
/// Segments stay held until acked; a failed ship rolls its pages back to
/// InvalidRetained but keeps them bundled, so a retry resends the
/// identical frame. Pages are never released without a digest-checked ack.
class OffloadEngine {
 public:
  OffloadEngine(ftl::Ftl& ftl, oplog::OpLog& log, DeviceKey key, OffloadConfig config = {});

  void set_transport(VaultTransport* transport) { transport_ = transport; }
  const OffloadConfig& config() const { return config_; }

  /// Claims up to max_pages oldest unbundled retained pages, appends an
  /// OffloadSealed entry, seals the log and bundles every sealed log
  /// segment not yet bundled. Throws Error(NothingToOffload) when there
  /// is neither an unbundled retained page nor an unshipped log entry.
  const OffloadSegment& build_segment(std::size_t max_pages);

  /// Sends a held segment. On Ack the pages become SafeToErase, an
  /// OffloadAcked entry is appended and the shipped log segments are
  /// released. On Nack OutOfOrder(expected) with `expected` held, that
  /// segment is shipped first and this one retried. Any other failure
  /// rolls the pages back to InvalidRetained.
  Reply ship(std::uint64_t segment_id);

  /// One offload round at simulated time `now`: respects the backoff
  /// window, then ships the oldest held segment or builds a new one.
  /// Returns true when a segment was acknowledged.
  bool step(SimTime now);

  /// Repeats step() until every retained page and log entry (except the
  /// trailing OffloadAcked) is in the vault, or a round fails.
  bool drain(SimTime now);

  bool should_offload() const;
  bool has_work() const;
  bool in_backoff(SimTime now) const { return now < next_attempt_; }
  SimTime next_attempt() const { return next_attempt_; }
  SimTime current_backoff() const { return backoff_; }

  std::vector<std::uint64_t> held_segments() const;
  const OffloadSegment* held(std::uint64_t segment_id) const;
  const Bytes* held_frame(std::uint64_t segment_id) const;
  std::uint64_t last_acked() const { return last_acked_; }
  OffloadStats stats() const { return stats_; }

 private:
  struct Held {
    OffloadSegment segment;
    std::vector<ftl::PageRef> refs;
    Bytes frame;
    Digest bundle{};
    std::uint64_t last_log_segment = 0;
    bool pages_pending = true;
  };

  void on_failure(Held& held, SimTime now, bool unreachable);
  bool unshipped_open_entries() const;

  ftl::Ftl& ftl_;
  oplog::OpLog& log_;
  DeviceKey key_;
  OffloadConfig config_;
  VaultTransport* transport_ = nullptr;

  std::map<std::uint64_t, Held> held_;
  std::uint64_t next_segment_id_ = 1;
  std::uint64_t last_bundled_log_ = 0;
  std::uint64_t last_acked_ = 0;
  Seq last_ack_entry_ = 0;
  SimTime clock_ = 0;  // latest time passed to step()
  SimTime next_attempt_ = 0;
  SimTime backoff_ = 0;
  OffloadStats stats_;
};

}  // namespace rssd::offload
