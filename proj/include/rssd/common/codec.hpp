#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "rssd/common/error.hpp"
#include "rssd/common/types.hpp"

namespace rssd {

/// Appends fixed-width big-endian integers and raw bytes to a buffer.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  void digest(const Digest& d) { raw(d); }
  /// u32 length prefix followed by the bytes.
  void str(std::string_view s);

  std::size_t size() const { return out_.size(); }

 private:
  Bytes& out_;
};

/// Bounds-checked big-endian reader. Underflow throws Error(MalformedFrame).
class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView raw(std::size_t n);
  Digest digest();
  std::string str();

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const;

  ByteView in_;
  std::size_t pos_ = 0;
};

void store_be64(std::uint8_t* dst, std::uint64_t v);
void store_be32(std::uint8_t* dst, std::uint32_t v);
std::uint64_t load_be64(const std::uint8_t* src);
std::uint32_t load_be32(const std::uint8_t* src);

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

}  // namespace rssd
