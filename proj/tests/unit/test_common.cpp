#include <catch_amalgamated.hpp>

#include <string>

#include "rssd/common/codec.hpp"
#include "rssd/common/compress.hpp"
#include "rssd/common/crypto.hpp"
#include "rssd/common/error.hpp"
#include "support.hpp"

using namespace rssd;

namespace {
Bytes str_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
}  // namespace

TEST_CASE("Codec - integers are big-endian and round trip") {
  Bytes out;
  ByteWriter w(out);
  w.u8(0xab);
  w.u32(0x01020304);
  w.u64(0x1122334455667788ULL);
  w.str("hi");
  REQUIRE(to_hex(out) == "ab01020304112233445566778800000002" + to_hex(str_bytes("hi")));

  ByteReader r(out);
  CHECK(r.u8() == 0xab);
  CHECK(r.u32() == 0x01020304u);
  CHECK(r.u64() == 0x1122334455667788ULL);
  CHECK(r.str() == "hi");
  CHECK(r.done());
}

TEST_CASE("Codec - reading past the end throws MalformedFrame") {
  Bytes out{1, 2, 3};
  ByteReader r(out);
  try {
    r.u32();
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MalformedFrame);
  }
}

TEST_CASE("Codec - hex round trip and rejection") {
  Bytes b{0x00, 0x7f, 0xff, 0x10};
  CHECK(to_hex(b) == "007fff10");
  CHECK(from_hex("007FFF10") == b);
  CHECK_THROWS_AS(from_hex("abc"), Error);
  CHECK_THROWS_AS(from_hex("zz"), Error);
}

TEST_CASE("Crypto - SHA-256 known answers") {
  CHECK(to_hex(sha256(str_bytes("abc"))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(to_hex(sha256({})) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  Sha256 h;
  h.update(str_bytes("a")).update(str_bytes("bc"));
  CHECK(h.finish() == sha256(str_bytes("abc")));
}

TEST_CASE("Crypto - AES-256-GCM known answers") {
  DeviceKey zero;
  AeadNonce nonce{};
  AeadTag tag{};
  Bytes pt(16, 0);
  auto ct = aead_seal(zero, nonce, {}, pt, tag);
  CHECK(to_hex(ct) == "cea7403d4d606b6e074ec5d3baf39d18");
  CHECK(to_hex(tag) == "d0d1c8a799996bf0265b98b5d48ab919");

  DeviceKey key;
  for (int i = 0; i < 32; ++i) key.bytes[i] = static_cast<std::uint8_t>(i);
  for (int i = 0; i < 12; ++i) nonce[i] = static_cast<std::uint8_t>(i);
  auto aad = str_bytes("header");
  auto ct2 = aead_seal(key, nonce, aad, str_bytes("retained page bytes"), tag);
  CHECK(to_hex(ct2) + to_hex(tag) ==
        "3567a27aac8ba77fad31f6ecd4c91a14f7b3f4e2c64bc8e4e11ca4e9f072f3e8b9cdc6");
}

TEST_CASE("Crypto - AEAD open rejects tampering and wrong keys") {
  auto key = DeviceKey::random();
  AeadNonce nonce{};
  nonce[11] = 9;
  AeadTag tag{};
  auto aad = str_bytes("aad");
  auto pt = str_bytes("plaintext that matters");
  auto ct = aead_seal(key, nonce, aad, pt, tag);

  auto ok = aead_open(key, nonce, aad, ct, tag);
  REQUIRE(ok);
  CHECK(*ok == pt);

  auto flipped = ct;
  flipped[3] ^= 0x01;
  CHECK_FALSE(aead_open(key, nonce, aad, flipped, tag));
  auto bad_aad = aad;
  bad_aad[0] ^= 0x80;
  CHECK_FALSE(aead_open(key, nonce, bad_aad, ct, tag));
  CHECK_FALSE(aead_open(DeviceKey::random(), nonce, aad, ct, tag));
}

TEST_CASE("Crypto - key files round trip") {
  testing::TempDir dir;
  auto key = DeviceKey::random();
  key.save(dir.path() / "k");
  CHECK(DeviceKey::load(dir.path() / "k") == key);
  CHECK(DeviceKey::from_hex(to_hex(key.bytes)) == key);
  CHECK_THROWS_AS(DeviceKey::from_hex("1234"), Error);
}

TEST_CASE("Compress - deflate round trip and size checks") {
  Bytes text;
  for (int i = 0; i < 200; ++i) {
    auto line = str_bytes("line of very compressible text\n");
    text.insert(text.end(), line.begin(), line.end());
  }
  auto z = deflate_bytes(text);
  CHECK(z.size() < text.size() / 4);
  CHECK(inflate_bytes(z, text.size()) == text);
  CHECK_THROWS_AS(inflate_bytes(z, text.size() + 1), Error);
  auto corrupt = z;
  corrupt[corrupt.size() / 2] ^= 0xff;
  CHECK_THROWS_AS(inflate_bytes(corrupt, text.size()), Error);
}

TEST_CASE("Error - carries code and detail") {
  Error e(Errc::TamperDetected, "bad", 42);
  CHECK(e.code() == Errc::TamperDetected);
  CHECK(e.detail() == 42u);
  CHECK(to_string(Errc::TamperDetected) == "TamperDetected");
}
