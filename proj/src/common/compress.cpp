#include "rssd/common/compress.hpp"

#include <zlib.h>

#include "rssd/common/error.hpp"

namespace rssd {

Bytes deflate_bytes(ByteView input) {
  uLongf bound = compressBound(static_cast<uLong>(input.size()));
  Bytes out(bound);
  if (compress2(out.data(), &bound, input.data(), static_cast<uLong>(input.size()),
                Z_BEST_SPEED) != Z_OK) {
    throw Error(Errc::Internal, "zlib compress2 failed");
  }
  out.resize(bound);
  return out;
}

Bytes inflate_bytes(ByteView input, std::size_t expected_size) {
  Bytes out(expected_size);
  uLongf out_len = static_cast<uLongf>(expected_size);
  int rc = uncompress(out.data(), &out_len, input.data(), static_cast<uLong>(input.size()));
  if (rc != Z_OK || out_len != expected_size) {
    throw Error(Errc::MalformedFrame, "zlib stream corrupt or size mismatch");
  }
  return out;
}

}  // namespace rssd
