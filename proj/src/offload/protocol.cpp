#include "rssd/offload/protocol.hpp"

#include "rssd/common/codec.hpp"
#include "rssd/common/error.hpp"

namespace rssd::offload {

std::string_view to_string(NackReason reason) {
  switch (reason) {
    case NackReason::AuthFailed: return "AuthFailed";
    case NackReason::OutOfOrder: return "OutOfOrder";
    case NackReason::ChainMismatch: return "ChainMismatch";
    case NackReason::DigestMismatch: return "DigestMismatch";
    case NackReason::Malformed: return "Malformed";
    case NackReason::Conflict: return "Conflict";
    case NackReason::StorageFailure: return "StorageFailure";
  }
  return "Unknown";
}

std::string to_string(const Reply& reply) {
  switch (reply.kind) {
    case Reply::Kind::Ack: return "Ack(" + std::to_string(reply.segment_id) + ")";
    case Reply::Kind::Nack:
      return "Nack(" + std::string(to_string(reply.reason)) + ", " + std::to_string(reply.detail) + ")";
    case Reply::Kind::Unreachable: return "Unreachable";
  }
  return "?";
}

Bytes encode_reply(const Reply& reply) {
  Bytes out;
  ByteWriter w(out);
  if (reply.kind == Reply::Kind::Ack) {
    w.u8(kStatusAck);
    w.u64(reply.segment_id);
  } else if (reply.kind == Reply::Kind::Nack) {
    w.u8(kStatusNack);
    w.u8(static_cast<std::uint8_t>(reply.reason));
    w.u64(reply.detail);
  } else {
    throw Error(Errc::Internal, "Unreachable is not a wire reply");
  }
  return out;
}

Reply decode_reply(ByteView bytes) {
  ByteReader r(bytes);
  Reply reply;
  auto status = r.u8();
  if (status == kStatusAck) {
    reply = Reply::ack(r.u64());
  } else if (status == kStatusNack) {
    auto reason = r.u8();
    if (reason < 1 || reason > 7) throw Error(Errc::MalformedFrame, "unknown nack reason");
    reply = Reply::nack(static_cast<NackReason>(reason), r.u64());
  } else {
    throw Error(Errc::MalformedFrame, "unknown reply status");
  }
  if (!r.done()) throw Error(Errc::MalformedFrame, "trailing bytes after reply");
  return reply;
}

}  // namespace rssd::offload
