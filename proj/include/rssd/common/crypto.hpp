#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>

#include "rssd/common/types.hpp"

struct evp_md_ctx_st;

namespace rssd {

Digest sha256(ByteView data);

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(ByteView data);
  Digest finish();

 private:
  evp_md_ctx_st* ctx_;
};

/// 256-bit symmetric key shared by the device and the vault operator.
struct DeviceKey {
  std::array<std::uint8_t, 32> bytes{};

  static DeviceKey random();
  static DeviceKey from_hex(std::string_view hex);
  /// Reads a key file holding 64 hex characters (whitespace ignored).
  static DeviceKey load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool operator==(const DeviceKey&) const = default;
};

inline constexpr std::size_t kAeadNonceSize = 12;
inline constexpr std::size_t kAeadTagSize = 16;

using AeadNonce = std::array<std::uint8_t, kAeadNonceSize>;
using AeadTag = std::array<std::uint8_t, kAeadTagSize>;

/// AES-256-GCM encryption. Returns the ciphertext (same length as the
/// plaintext) and writes the tag.
Bytes aead_seal(const DeviceKey& key, const AeadNonce& nonce, ByteView aad, ByteView plaintext,
                AeadTag& tag);

/// AES-256-GCM decryption; nullopt when authentication fails.
std::optional<Bytes> aead_open(const DeviceKey& key, const AeadNonce& nonce, ByteView aad,
                               ByteView ciphertext, const AeadTag& tag);

}  // namespace rssd
