#include "rssd/common/codec.hpp"

#include <algorithm>

namespace rssd {

void store_be64(std::uint8_t* dst, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    dst[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
}

void store_be32(std::uint8_t* dst, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) {
    dst[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
}

std::uint64_t load_be64(const std::uint8_t* src) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | src[i];
  return v;
}

std::uint32_t load_be32(const std::uint8_t* src) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | src[i];
  return v;
}

void ByteWriter::u32(std::uint32_t v) {
  std::uint8_t buf[4];
  store_be32(buf, v);
  out_.insert(out_.end(), buf, buf + 4);
}

void ByteWriter::u64(std::uint64_t v) {
  std::uint8_t buf[8];
  store_be64(buf, v);
  out_.insert(out_.end(), buf, buf + 8);
}

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    throw Error(Errc::MalformedFrame, "truncated input");
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return in_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  auto v = load_be32(in_.data() + pos_);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  auto v = load_be64(in_.data() + pos_);
  pos_ += 8;
  return v;
}

ByteView ByteReader::raw(std::size_t n) {
  need(n);
  auto view = in_.subspan(pos_, n);
  pos_ += n;
  return view;
}

Digest ByteReader::digest() {
  Digest d;
  auto view = raw(d.size());
  std::copy(view.begin(), view.end(), d.begin());
  return d;
}

std::string ByteReader::str() {
  auto n = u32();
  auto view = raw(n);
  return std::string(view.begin(), view.end());
}

std::string to_hex(ByteView bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(bytes.size() * 2, '0');
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    out[2 * i] = kHex[bytes[i] >> 4];
    out[2 * i + 1] = kHex[bytes[i] & 0x0f];
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw Error(Errc::ConfigError, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::ConfigError, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

}  // namespace rssd
