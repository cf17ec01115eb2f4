#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "ivote/bytes.hpp"
#include "ivote/errors.hpp"

namespace ivote::crypto {

inline constexpr std::size_t kGcmNonceLen = 12;
inline constexpr std::size_t kGcmTagLen = 16;
inline constexpr std::size_t kKeyLen = 16;
inline constexpr std::size_t kEd25519KeyLen = 32;
inline constexpr std::size_t kEd25519SigLen = 64;
inline constexpr std::size_t kX25519KeyLen = 32;

Bytes sha256(ByteView data);
Bytes pbkdf2_hmac_sha1(ByteView password, ByteView salt, int iterations,
                       std::size_t dklen);

// Nonce-prefixed AES-128-GCM envelope. Serialized form is
// nonce || ciphertext || tag, always >= 28 bytes.
struct SealedBlob {
  Bytes nonce;            // 12 bytes
  Bytes ciphertext_tag;   // ciphertext followed by 16-byte tag

  Bytes serialize() const;
  static SealedBlob parse(ByteView raw);

  std::string to_base64() const { return base64_encode(serialize()); }
  static SealedBlob from_base64(std::string_view b64) {
    return parse(base64_decode(b64));
  }

  bool operator==(const SealedBlob&) const = default;
};

SealedBlob seal(const Key16& key, ByteView nonce12, ByteView plaintext);
SealedBlob seal(const Key16& key, Rng& rng, ByteView plaintext);
// Authenticates the tag before returning any plaintext; throws AuthError
// on mismatch.
Bytes unseal(const Key16& key, const SealedBlob& blob);

// Ed25519. Keys are raw 32-byte values, signatures 64 bytes, verification
// deterministic.
class SigningKey {
 public:
  static SigningKey generate(Rng& rng);
  static SigningKey from_seed(ByteView seed32);

  Bytes seed() const { return seed_; }
  Bytes public_key() const;
  Bytes sign(ByteView message) const;

 private:
  SigningKey() = default;
  Bytes seed_;
};

bool verify(ByteView public_key32, ByteView message, ByteView signature);

// X25519 key pair for the election's hybrid encryption. wrap_key produces
// ephemeral_public(32) || SealedBlob(content key) so only the holder of the
// private scalar can recover the content key.
struct KemKeyPair {
  Bytes public_key;   // 32 bytes
  Bytes private_key;  // 32 bytes
  static KemKeyPair generate(Rng& rng);
};

Bytes wrap_key(ByteView recipient_public32, const Key16& content_key, Rng& rng);
Key16 unwrap_key(ByteView recipient_private32, ByteView wrapped);

}  // namespace ivote::crypto
