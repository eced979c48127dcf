#include "rssd/common/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cctype>
#include <fstream>
#include <sstream>

#include "rssd/common/codec.hpp"
#include "rssd/common/error.hpp"

namespace rssd {

Digest sha256(ByteView data) {
  Digest out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::Internal, "EVP_Digest failed");
  }
  return out;
}

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::Internal, "EVP_DigestInit_ex failed");
  }
}

Sha256::~Sha256() { EVP_MD_CTX_free(ctx_); }

Sha256& Sha256::update(ByteView data) {
  EVP_DigestUpdate(ctx_, data.data(), data.size());
  return *this;
}

Digest Sha256::finish() {
  Digest out;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx_, out.data(), &len);
  return out;
}

DeviceKey DeviceKey::random() {
  DeviceKey key;
  if (RAND_bytes(key.bytes.data(), static_cast<int>(key.bytes.size())) != 1) {
    throw Error(Errc::Internal, "RAND_bytes failed");
  }
  return key;
}

DeviceKey DeviceKey::from_hex(std::string_view hex) {
  auto raw = rssd::from_hex(hex);
  if (raw.size() != 32) throw Error(Errc::ConfigError, "device key must be 32 bytes");
  DeviceKey key;
  std::copy(raw.begin(), raw.end(), key.bytes.begin());
  return key;
}

DeviceKey DeviceKey::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open key file " + path.string());
  std::string hex;
  char c;
  while (in.get(c)) {
    if (!std::isspace(static_cast<unsigned char>(c))) hex.push_back(c);
  }
  return from_hex(hex);
}

void DeviceKey::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::ConfigError, "cannot write key file " + path.string());
  out << to_hex(bytes) << "\n";
}

namespace {

struct CipherCtx {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  ~CipherCtx() { EVP_CIPHER_CTX_free(ctx); }
};

}  // namespace

Bytes aead_seal(const DeviceKey& key, const AeadNonce& nonce, ByteView aad, ByteView plaintext,
                AeadTag& tag) {
  CipherCtx c;
  Bytes out(plaintext.size());
  int len = 0;
  bool ok = EVP_EncryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, kAeadNonceSize, nullptr) == 1 &&
            EVP_EncryptInit_ex(c.ctx, nullptr, nullptr, key.bytes.data(), nonce.data()) == 1 &&
            EVP_EncryptUpdate(c.ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1;
  if (ok && !plaintext.empty()) {
    ok = EVP_EncryptUpdate(c.ctx, out.data(), &len, plaintext.data(),
                           static_cast<int>(plaintext.size())) == 1;
  }
  ok = ok && EVP_EncryptFinal_ex(c.ctx, out.data() + plaintext.size(), &len) == 1 &&
       EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_GET_TAG, kAeadTagSize, tag.data()) == 1;
  if (!ok) throw Error(Errc::Internal, "AES-GCM encryption failed");
  return out;
}

std::optional<Bytes> aead_open(const DeviceKey& key, const AeadNonce& nonce, ByteView aad,
                               ByteView ciphertext, const AeadTag& tag) {
  CipherCtx c;
  Bytes out(ciphertext.size());
  int len = 0;
  AeadTag tag_copy = tag;
  bool ok = EVP_DecryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, kAeadNonceSize, nullptr) == 1 &&
            EVP_DecryptInit_ex(c.ctx, nullptr, nullptr, key.bytes.data(), nonce.data()) == 1 &&
            EVP_DecryptUpdate(c.ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1;
  if (ok && !ciphertext.empty()) {
    ok = EVP_DecryptUpdate(c.ctx, out.data(), &len, ciphertext.data(),
                           static_cast<int>(ciphertext.size())) == 1;
  }
  ok = ok && EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_TAG, kAeadTagSize, tag_copy.data()) == 1 &&
       EVP_DecryptFinal_ex(c.ctx, out.data() + ciphertext.size(), &len) == 1;
  if (!ok) return std::nullopt;
  return out;
}

}  // namespace rssd
