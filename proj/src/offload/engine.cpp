#include "rssd/offload/engine.hpp"

#include <algorithm>

#include "rssd/common/error.hpp"

namespace rssd::offload {

OffloadEngine::OffloadEngine(ftl::Ftl& ftl, oplog::OpLog& log, DeviceKey key, OffloadConfig config)
    : ftl_(ftl), log_(log), key_(key), config_(config) {
  if (!log_.enabled()) throw Error(Errc::ConfigError, "offload requires operation logging");
  if (config_.max_pages == 0) throw Error(Errc::ConfigError, "offload max_pages must be >= 1");
}

const OffloadSegment& OffloadEngine::build_segment(std::size_t max_pages) {
  auto guard = ftl_.lock();
  std::uint64_t id = next_segment_id_;
  bool logs_waiting = log_.last_sealed_id() > last_bundled_log_ || unshipped_open_entries();
  if (!logs_waiting && !ftl_.has_claimable_retained()) {
    throw Error(Errc::NothingToOffload, "no unbundled retained pages and no unshipped log entries");
  }
  auto claimed = ftl_.claim_retained(max_pages, id);

  Held held;
  held.segment.segment_id = id;
  held.segment.page_size = ftl_.page_size();
  held.segment.page_records.reserve(claimed.size());
  held.refs.reserve(claimed.size());
  for (auto& c : claimed) {
    held.refs.push_back(c.ref);
    held.segment.page_records.push_back(
        PageRecord{c.ref.write_seq, c.lpa, c.timestamp, std::move(c.data)});
  }
  held.bundle = bundle_digest(id, held.segment.page_records);
  log_.append(oplog::EntryKind::OffloadSealed, std::nullopt, std::nullopt, held.bundle, ftl_.now());
  if (log_.open_entries() > 0) log_.seal_segment();

  held.segment.log_segments = log_.sealed_after(last_bundled_log_);
  if (held.segment.log_segments.empty()) throw Error(Errc::Internal, "sealed log segment missing");
  held.segment.prev_tail_hash = held.segment.log_segments.front().head_hash;
  held.last_log_segment = held.segment.log_segments.back().segment_id;
  held.frame = encode_frame(held.segment, key_, config_.compression);
  stats_.plaintext_bytes += held.segment.page_records.size() * std::uint64_t{held.segment.page_size};

  last_bundled_log_ = held.last_log_segment;
  ++next_segment_id_;
  ++stats_.segments_built;
  auto [it, inserted] = held_.emplace(id, std::move(held));
  return it->second.segment;
}

void OffloadEngine::on_failure(Held& held, SimTime now, bool unreachable) {
  if (held.pages_pending) {
    ftl_.rollback(held.refs);
    held.pages_pending = false;
  }
  if (unreachable) {
    ++stats_.unreachable;
  } else {
    ++stats_.nacks;
  }
  backoff_ = backoff_ == 0 ? config_.backoff_initial : std::min(backoff_ * 2, config_.backoff_cap);
  next_attempt_ = now + backoff_;
}

Reply OffloadEngine::ship(std::uint64_t segment_id) {
  auto guard = ftl_.lock();
  auto it = held_.find(segment_id);
  if (it == held_.end()) {
    throw Error(Errc::UnknownSegment, "segment " + std::to_string(segment_id) + " is not held",
                segment_id);
  }
  Held& held = it->second;
  if (!held.pages_pending) {
    ftl_.reclaim(held.refs);
    held.pages_pending = true;
  }
  SimTime now = std::max(ftl_.now(), clock_);
  if (!transport_) {
    on_failure(held, now, true);
    return Reply::unreachable();
  }
  ++stats_.frames_sent;
  stats_.frame_bytes_sent += held.frame.size();
  Reply reply = transport_->send(held.frame);

  if (reply.kind == Reply::Kind::Ack && reply.segment_id == segment_id) {
    ftl_.acknowledge(held.refs);
    last_ack_entry_ =
        log_.append(oplog::EntryKind::OffloadAcked, std::nullopt, std::nullopt, held.bundle, now).seq;
    log_.release_through(held.last_log_segment);
    stats_.pages_acked += held.refs.size();
    ++stats_.segments_acked;
    last_acked_ = segment_id;
    backoff_ = 0;
    next_attempt_ = 0;
    held_.erase(it);
    return reply;
  }
  if (reply.kind == Reply::Kind::Nack && reply.reason == NackReason::OutOfOrder &&
      reply.detail < segment_id && held_.count(reply.detail)) {
    ++stats_.out_of_order_resends;
    Reply first = ship(reply.detail);
    if (first.kind == Reply::Kind::Ack) return ship(segment_id);
    auto again = held_.find(segment_id);
    if (again != held_.end()) on_failure(again->second, now, false);
    return first;
  }
  if (reply.kind == Reply::Kind::Ack) reply = Reply::nack(NackReason::Malformed, reply.segment_id);
  on_failure(held, now, reply.kind == Reply::Kind::Unreachable);
  return reply;
}

bool OffloadEngine::step(SimTime now) {
  auto guard = ftl_.lock();
  clock_ = std::max(clock_, now);
  if (in_backoff(now)) return false;
  if (!held_.empty()) return ship(held_.begin()->first).kind == Reply::Kind::Ack;
  try {
    const auto& segment = build_segment(config_.max_pages);
    return ship(segment.segment_id).kind == Reply::Kind::Ack;
  } catch (const Error& e) {
    if (e.code() == Errc::NothingToOffload) return false;
    throw;
  }
}

bool OffloadEngine::drain(SimTime now) {
  auto guard = ftl_.lock();
  bool any = false;
  while (has_work()) {
    if (!step(now)) break;
    any = true;
  }
  return any;
}

bool OffloadEngine::unshipped_open_entries() const {
  auto open = log_.open_entries();
  // The OffloadAcked entry of the last ack travels with the next segment.
  return open > 1 || (open == 1 && log_.last_seq() != last_ack_entry_);
}

bool OffloadEngine::should_offload() const {
  if (!held_.empty()) return true;
  if (log_.last_sealed_id() >= last_bundled_log_ + config_.log_segment_backlog) return true;
  return ftl_.retained_fraction() > ftl_.config().gc.offload_watermark;
}

bool OffloadEngine::has_work() const {
  return !held_.empty() || log_.last_sealed_id() > last_bundled_log_ ||
         unshipped_open_entries() || ftl_.has_claimable_retained();
}

std::vector<std::uint64_t> OffloadEngine::held_segments() const {
  std::vector<std::uint64_t> out;
  for (const auto& [id, h] : held_) out.push_back(id);
  return out;
}

const OffloadSegment* OffloadEngine::held(std::uint64_t segment_id) const {
  auto it = held_.find(segment_id);
  return it == held_.end() ? nullptr : &it->second.segment;
}

const Bytes* OffloadEngine::held_frame(std::uint64_t segment_id) const {
  auto it = held_.find(segment_id);
  return it == held_.end() ? nullptr : &it->second.frame;
}

}  // namespace rssd::offload
