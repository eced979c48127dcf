#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rssd {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// SHA-256 output. Used for payload digests and chain hashes.
using Digest = std::array<std::uint8_t, 32>;

/// Logical page address as seen by the host.
using Lpa = std::uint64_t;

/// Global operation sequence number; 0 means "none", the first logged op is 1.
using Seq = std::uint64_t;

/// Simulated time in nanoseconds.
using SimTime = std::uint64_t;

inline constexpr SimTime kNanosPerSecond = 1'000'000'000ULL;
inline constexpr SimTime kNanosPerMinute = 60 * kNanosPerSecond;
inline constexpr SimTime kNanosPerDay = 24 * 60 * kNanosPerMinute;

inline constexpr Digest kZeroDigest{};

}  // namespace rssd
