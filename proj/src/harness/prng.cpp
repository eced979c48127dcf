#include "rssd/harness/prng.hpp"

#include <cstring>

namespace rssd::harness {

std::uint64_t Prng::below(std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    std::uint64_t x = next();
    if (x < limit) return x % n;
  }
}

void Prng::fill(std::uint8_t* data, std::size_t size) {
  std::size_t i = 0;
  for (; i + 8 <= size; i += 8) {
    std::uint64_t x = next();
    std::memcpy(data + i, &x, 8);
  }
  if (i < size) {
    std::uint64_t x = next();
    std::memcpy(data + i, &x, size - i);
  }
}

Bytes benign_payload(std::uint64_t seed, std::uint32_t page_size) {
  static constexpr char kWords[] =
      "the quick brown fox jumps over a lazy dog while storage keeps every block ";
  Prng prng(seed ^ 0x9e3779b97f4a7c15ULL);
  Bytes out(page_size);
  std::size_t line = 64;
  std::uint64_t offset = prng.below(sizeof(kWords) - 1);
  for (std::size_t i = 0; i < page_size; ++i) {
    out[i] = static_cast<std::uint8_t>(kWords[(offset + i % line) % (sizeof(kWords) - 1)]);
  }
  // Seed-dependent stamp on every line keeps pages distinct.
  for (std::size_t base = 0; base + 8 <= page_size; base += line) {
    std::uint64_t v = seed + base;
    std::memcpy(out.data() + base, &v, 8);
  }
  if (page_size < 8) {
    for (std::size_t i = 0; i < page_size; ++i) out[i] ^= static_cast<std::uint8_t>(seed >> (8 * i));
  }
  return out;
}

Bytes ransom_payload(Prng& prng, std::uint32_t page_size) {
  Bytes out(page_size);
  prng.fill(out.data(), out.size());
  return out;
}

}  // namespace rssd::harness
