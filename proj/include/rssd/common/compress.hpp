#pragma once

#include <cstddef>

#include "rssd/common/types.hpp"

namespace rssd {

/// zlib deflate at the fastest level.
Bytes deflate_bytes(ByteView input);

/// Inflates a zlib stream whose decompressed size is known in advance.
/// Throws Error(MalformedFrame) on corrupt input or size mismatch.
Bytes inflate_bytes(ByteView input, std::size_t expected_size);

}  // namespace rssd
