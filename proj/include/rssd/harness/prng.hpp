#pragma once

#include <cstdint>
#include <algorithm>
#include <random>
#include <vector>

#include "rssd/common/types.hpp"

namespace rssd::harness {

/// Seeded generator with platform-independent derived sampling (the
/// standard distributions are implementation-defined).
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
  void fill(std::uint8_t* data, std::size_t size);

  /// k distinct elements of `pool`, chosen uniformly, in pool order.
  template <typename T>
  std::vector<T> sample(const std::vector<T>& pool, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

template <typename T>
std::vector<T> Prng::sample(const std::vector<T>& pool, std::size_t k) {
  if (k >= pool.size()) return pool;
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + below(idx.size() - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(k);
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

/// Compressible page content derived from a seed (text-like repetition).
Bytes benign_payload(std::uint64_t seed, std::uint32_t page_size);
/// Incompressible page content standing in for ciphertext.
Bytes ransom_payload(Prng& prng, std::uint32_t page_size);

}  // namespace rssd::harness
