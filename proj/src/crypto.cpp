#include "ivote/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cstring>
#include <memory>

namespace ivote::crypto {

namespace {

struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

struct PkeyFree {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using Pkey = std::unique_ptr<EVP_PKEY, PkeyFree>;

struct MdCtxFree {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;

Pkey raw_private(int type, ByteView raw) {
  Pkey key(EVP_PKEY_new_raw_private_key(type, nullptr, raw.data(), raw.size()));
  if (!key) throw ValidationError("bad raw private key");
  return key;
}

Pkey raw_public(int type, ByteView raw) {
  Pkey key(EVP_PKEY_new_raw_public_key(type, nullptr, raw.data(), raw.size()));
  if (!key) throw ValidationError("bad raw public key");
  return key;
}

Bytes raw_public_of(EVP_PKEY* key) {
  std::size_t len = 0;
  if (EVP_PKEY_get_raw_public_key(key, nullptr, &len) != 1)
    throw Error("raw public key export failed");
  Bytes out(len);
  if (EVP_PKEY_get_raw_public_key(key, out.data(), &len) != 1)
    throw Error("raw public key export failed");
  out.resize(len);
  return out;
}

}  // namespace

Bytes sha256(ByteView data) {
  Bytes out(SHA256_DIGEST_LENGTH);
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Bytes pbkdf2_hmac_sha1(ByteView password, ByteView salt, int iterations,
                       std::size_t dklen) {
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  Bytes out(dklen);
  if (PKCS5_PBKDF2_HMAC(reinterpret_cast<const char*>(password.data()),
                        static_cast<int>(password.size()), salt.data(),
                        static_cast<int>(salt.size()), iterations, EVP_sha1(),
                        static_cast<int>(dklen), out.data()) != 1) {
    throw Error("PBKDF2 failed");
  }
  return out;
}

Bytes SealedBlob::serialize() const {
  Bytes out;
  out.reserve(nonce.size() + ciphertext_tag.size());
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), ciphertext_tag.begin(), ciphertext_tag.end());
  return out;
}

SealedBlob SealedBlob::parse(ByteView raw) {
  if (raw.size() < kGcmNonceLen + kGcmTagLen)
    throw ValidationError("sealed blob too short");
  SealedBlob blob;
  blob.nonce.assign(raw.begin(), raw.begin() + kGcmNonceLen);
  blob.ciphertext_tag.assign(raw.begin() + kGcmNonceLen, raw.end());
  return blob;
}

SealedBlob seal(const Key16& key, ByteView nonce12, ByteView plaintext) {
  if (nonce12.size() != kGcmNonceLen)
    throw ValidationError("nonce must be 12 bytes");
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw Error("cipher ctx alloc failed");
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(),
                         nonce12.data()) != 1)
    throw Error("gcm init failed");
  Bytes ct(plaintext.size() + kGcmTagLen);
  int len = 0;
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), ct.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1)
    throw Error("gcm encrypt failed");
  int fin = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), ct.data() + len, &fin) != 1)
    throw Error("gcm finalize failed");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG,
                          static_cast<int>(kGcmTagLen),
                          ct.data() + plaintext.size()) != 1)
    throw Error("gcm tag fetch failed");
  SealedBlob blob;
  blob.nonce.assign(nonce12.begin(), nonce12.end());
  blob.ciphertext_tag = std::move(ct);
  return blob;
}

SealedBlob seal(const Key16& key, Rng& rng, ByteView plaintext) {
  Bytes nonce = rng.bytes(kGcmNonceLen);
  return seal(key, nonce, plaintext);
}

Bytes unseal(const Key16& key, const SealedBlob& blob) {
  if (blob.nonce.size() != kGcmNonceLen)
    throw ValidationError("nonce must be 12 bytes");
  if (blob.ciphertext_tag.size() < kGcmTagLen)
    throw ValidationError("ciphertext shorter than tag");
  const std::size_t ct_len = blob.ciphertext_tag.size() - kGcmTagLen;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw Error("cipher ctx alloc failed");
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(),
                         blob.nonce.data()) != 1)
    throw Error("gcm init failed");
  Bytes pt(ct_len);
  int len = 0;
  if (ct_len > 0 &&
      EVP_DecryptUpdate(ctx.get(), pt.data(), &len, blob.ciphertext_tag.data(),
                        static_cast<int>(ct_len)) != 1)
    throw AuthError("authentication failed");
  Bytes tag(blob.ciphertext_tag.end() - kGcmTagLen, blob.ciphertext_tag.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG,
                          static_cast<int>(kGcmTagLen), tag.data()) != 1)
    throw Error("gcm tag set failed");
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), pt.data() + len, &fin) != 1)
    throw AuthError("authentication failed");
  pt.resize(static_cast<std::size_t>(len + fin));
  return pt;
}

SigningKey SigningKey::generate(Rng& rng) {
  return from_seed(rng.bytes(kEd25519KeyLen));
}

SigningKey SigningKey::from_seed(ByteView seed32) {
  if (seed32.size() != kEd25519KeyLen)
    throw ValidationError("signing key seed must be 32 bytes");
  SigningKey key;
  key.seed_.assign(seed32.begin(), seed32.end());
  // Validate eagerly so malformed keys fail at construction.
  raw_private(EVP_PKEY_ED25519, key.seed_);
  return key;
}

Bytes SigningKey::public_key() const {
  Pkey key = raw_private(EVP_PKEY_ED25519, seed_);
  return raw_public_of(key.get());
}

Bytes SigningKey::sign(ByteView message) const {
  Pkey key = raw_private(EVP_PKEY_ED25519, seed_);
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx) throw Error("md ctx alloc failed");
  if (EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
    throw Error("sign init failed");
  std::size_t sig_len = kEd25519SigLen;
  Bytes sig(sig_len);
  if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(),
                     message.size()) != 1)
    throw Error("sign failed");
  sig.resize(sig_len);
  return sig;
}

bool verify(ByteView public_key32, ByteView message, ByteView signature) {
  if (public_key32.size() != kEd25519KeyLen ||
      signature.size() != kEd25519SigLen)
    return false;
  Pkey key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                       public_key32.data(),
                                       public_key32.size()));
  if (!key) return false;
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx) return false;
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) !=
      1)
    return false;
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                          message.data(), message.size()) == 1;
}

KemKeyPair KemKeyPair::generate(Rng& rng) {
  Bytes secret = rng.bytes(kX25519KeyLen);
  Pkey key = raw_private(EVP_PKEY_X25519, secret);
  KemKeyPair pair;
  pair.private_key = std::move(secret);
  pair.public_key = raw_public_of(key.get());
  return pair;
}

namespace {

Bytes x25519_shared(ByteView private32, ByteView public32) {
  Pkey sk = raw_private(EVP_PKEY_X25519, private32);
  Pkey pk = raw_public(EVP_PKEY_X25519, public32);
  std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)> ctx(
      EVP_PKEY_CTX_new(sk.get(), nullptr), EVP_PKEY_CTX_free);
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_derive_set_peer(ctx.get(), pk.get()) != 1)
    throw Error("x25519 derive init failed");
  std::size_t len = 0;
  if (EVP_PKEY_derive(ctx.get(), nullptr, &len) != 1)
    throw Error("x25519 derive failed");
  Bytes out(len);
  if (EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1)
    throw Error("x25519 derive failed");
  out.resize(len);
  return out;
}

Key16 kek_from(ByteView shared, ByteView eph_pub, ByteView recipient_pub) {
  Bytes material;
  material.insert(material.end(), shared.begin(), shared.end());
  material.insert(material.end(), eph_pub.begin(), eph_pub.end());
  material.insert(material.end(), recipient_pub.begin(), recipient_pub.end());
  Bytes digest = sha256(material);
  Key16 kek;
  std::memcpy(kek.data(), digest.data(), kek.size());
  return kek;
}

}  // namespace

Bytes wrap_key(ByteView recipient_public32, const Key16& content_key,
               Rng& rng) {
  if (recipient_public32.size() != kX25519KeyLen)
    throw ValidationError("recipient public key must be 32 bytes");
  KemKeyPair eph = KemKeyPair::generate(rng);
  Bytes shared = x25519_shared(eph.private_key, recipient_public32);
  Key16 kek = kek_from(shared, eph.public_key, recipient_public32);
  SealedBlob sealed = seal(kek, rng, ByteView(content_key.data(), content_key.size()));
  Bytes out = eph.public_key;
  Bytes blob = sealed.serialize();
  out.insert(out.end(), blob.begin(), blob.end());
  return out;
}

Key16 unwrap_key(ByteView recipient_private32, ByteView wrapped) {
  if (wrapped.size() < kX25519KeyLen + kGcmNonceLen + kGcmTagLen + kKeyLen)
    throw ValidationError("wrapped key too short");
  ByteView eph_pub = wrapped.subspan(0, kX25519KeyLen);
  Pkey sk = raw_private(EVP_PKEY_X25519, recipient_private32);
  Bytes recipient_pub = raw_public_of(sk.get());
  Bytes shared = x25519_shared(recipient_private32, eph_pub);
  Key16 kek = kek_from(shared, eph_pub, recipient_pub);
  SealedBlob blob = SealedBlob::parse(wrapped.subspan(kX25519KeyLen));
  Bytes key = unseal(kek, blob);
  if (key.size() != kKeyLen) throw AuthError("unwrapped key has wrong size");
  Key16 out;
  std::memcpy(out.data(), key.data(), out.size());
  return out;
}

}  // namespace ivote::crypto
