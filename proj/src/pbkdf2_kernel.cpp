#include "ivote/pbkdf2_kernel.hpp"

#include <algorithm>
#include <cstring>

#include "ivote/errors.hpp"

namespace ivote::bruteforce {

namespace {

inline std::uint32_t rotl(std::uint32_t v, int s) {
  return (v << s) | (v >> (32 - s));
}

constexpr Sha1State kSha1Init = {
    {0x67452301u, 0xefcdab89u, 0x98badcfeu, 0x10325476u, 0xc3d2e1f0u}};

void put_be32(std::uint8_t* out, std::uint32_t v) {
  out[0] = static_cast<std::uint8_t>(v >> 24);
  out[1] = static_cast<std::uint8_t>(v >> 16);
  out[2] = static_cast<std::uint8_t>(v >> 8);
  out[3] = static_cast<std::uint8_t>(v);
}

void put_be64(std::uint8_t* out, std::uint64_t v) {
  put_be32(out, static_cast<std::uint32_t>(v >> 32));
  put_be32(out + 4, static_cast<std::uint32_t>(v));
}

void state_to_digest(const Sha1State& s, std::uint8_t out[20]) {
  for (int i = 0; i < 5; ++i) put_be32(out + 4 * i, s.h[i]);
}

// Base64 of a 32-byte digest, standard alphabet with one '=' of padding.
void b64_44(const std::uint8_t in[32], char out[44]) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  int o = 0;
  for (int i = 0; i + 3 <= 32; i += 3) {
    std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
    out[o++] = kAlphabet[(v >> 18) & 63];
    out[o++] = kAlphabet[(v >> 12) & 63];
    out[o++] = kAlphabet[(v >> 6) & 63];
    out[o++] = kAlphabet[v & 63];
  }
  std::uint32_t v = (in[30] << 16) | (in[31] << 8);
  out[o++] = kAlphabet[(v >> 18) & 63];
  out[o++] = kAlphabet[(v >> 12) & 63];
  out[o++] = kAlphabet[(v >> 6) & 63];
  out[o++] = '=';
}

// Minimal SHA-256, used only to hash candidate PINs while building the
// password string (keeps the kernel free of library calls on the hot path).
struct Sha256Ctx {
  std::uint32_t h[8];
};

constexpr std::uint32_t kSha256K[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

void sha256_compress(Sha256Ctx& ctx, const std::uint8_t block[64]) {
  std::uint32_t w[64];
  for (int i = 0; i < 16; ++i) {
    w[i] = (static_cast<std::uint32_t>(block[4 * i]) << 24) |
           (static_cast<std::uint32_t>(block[4 * i + 1]) << 16) |
           (static_cast<std::uint32_t>(block[4 * i + 2]) << 8) |
           static_cast<std::uint32_t>(block[4 * i + 3]);
  }
  for (int i = 16; i < 64; ++i) {
    std::uint32_t s0 = rotl(w[i - 15], 25) ^ rotl(w[i - 15], 14) ^ (w[i - 15] >> 3);
    std::uint32_t s1 = rotl(w[i - 2], 15) ^ rotl(w[i - 2], 13) ^ (w[i - 2] >> 10);
    w[i] = w[i - 16] + s0 + w[i - 7] + s1;
  }
  std::uint32_t a = ctx.h[0], b = ctx.h[1], c = ctx.h[2], d = ctx.h[3];
  std::uint32_t e = ctx.h[4], f = ctx.h[5], g = ctx.h[6], h = ctx.h[7];
  for (int i = 0; i < 64; ++i) {
    std::uint32_t s1 = rotl(e, 26) ^ rotl(e, 21) ^ rotl(e, 7);
    std::uint32_t ch = (e & f) ^ (~e & g);
    std::uint32_t t1 = h + s1 + ch + kSha256K[i] + w[i];
    std::uint32_t s0 = rotl(a, 30) ^ rotl(a, 19) ^ rotl(a, 10);
    std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
    std::uint32_t t2 = s0 + maj;
    h = g; g = f; f = e; e = d + t1;
    d = c; c = b; b = a; a = t1 + t2;
  }
  ctx.h[0] += a; ctx.h[1] += b; ctx.h[2] += c; ctx.h[3] += d;
  ctx.h[4] += e; ctx.h[5] += f; ctx.h[6] += g; ctx.h[7] += h;
}

// Single-block-message SHA-256 (inputs up to 55 bytes: PINs are tiny).
void sha256_short(ByteView data, std::uint8_t out[32]) {
  if (data.size() > 55) throw ValidationError("sha256_short: input too long");
  Sha256Ctx ctx{{0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f,
                 0x9b05688c, 0x1f83d9ab, 0x5be0cd19}};
  std::uint8_t block[64] = {0};
  std::memcpy(block, data.data(), data.size());
  block[data.size()] = 0x80;
  put_be64(block + 56, static_cast<std::uint64_t>(data.size()) * 8);
  sha256_compress(ctx, block);
  for (int i = 0; i < 8; ++i) put_be32(out + 4 * i, ctx.h[i]);
}

}  // namespace

void sha1_compress(Sha1State& state, const std::uint8_t block[64]) {
  std::uint32_t w[80];
  for (int i = 0; i < 16; ++i) {
    w[i] = (static_cast<std::uint32_t>(block[4 * i]) << 24) |
           (static_cast<std::uint32_t>(block[4 * i + 1]) << 16) |
           (static_cast<std::uint32_t>(block[4 * i + 2]) << 8) |
           static_cast<std::uint32_t>(block[4 * i + 3]);
  }
  for (int i = 16; i < 80; ++i)
    w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);

  std::uint32_t a = state.h[0], b = state.h[1], c = state.h[2];
  std::uint32_t d = state.h[3], e = state.h[4];

  for (int i = 0; i < 20; ++i) {
    std::uint32_t t = rotl(a, 5) + ((b & c) | (~b & d)) + e + w[i] + 0x5a827999u;
    e = d; d = c; c = rotl(b, 30); b = a; a = t;
  }
  for (int i = 20; i < 40; ++i) {
    std::uint32_t t = rotl(a, 5) + (b ^ c ^ d) + e + w[i] + 0x6ed9eba1u;
    e = d; d = c; c = rotl(b, 30); b = a; a = t;
  }
  for (int i = 40; i < 60; ++i) {
    std::uint32_t t =
        rotl(a, 5) + ((b & c) | (b & d) | (c & d)) + e + w[i] + 0x8f1bbcdcu;
    e = d; d = c; c = rotl(b, 30); b = a; a = t;
  }
  for (int i = 60; i < 80; ++i) {
    std::uint32_t t = rotl(a, 5) + (b ^ c ^ d) + e + w[i] + 0xca62c1d6u;
    e = d; d = c; c = rotl(b, 30); b = a; a = t;
  }

  state.h[0] += a;
  state.h[1] += b;
  state.h[2] += c;
  state.h[3] += d;
  state.h[4] += e;
}

void sha1(ByteView data, std::uint8_t out[20]) {
  Sha1State state = kSha1Init;
  std::size_t off = 0;
  while (data.size() - off >= 64) {
    sha1_compress(state, data.data() + off);
    off += 64;
  }
  std::uint8_t block[64] = {0};
  const std::size_t rem = data.size() - off;
  std::memcpy(block, data.data() + off, rem);
  block[rem] = 0x80;
  if (rem >= 56) {
    sha1_compress(state, block);
    std::memset(block, 0, sizeof(block));
  }
  put_be64(block + 56, static_cast<std::uint64_t>(data.size()) * 8);
  sha1_compress(state, block);
  state_to_digest(state, out);
}

void HmacSha1::set_key(ByteView key) {
  std::uint8_t key_block[64] = {0};
  if (key.size() > 64) {
    sha1(key, key_block);  // hashed key is 20 bytes
  } else {
    std::memcpy(key_block, key.data(), key.size());
  }
  std::uint8_t pad[64];
  for (int i = 0; i < 64; ++i) pad[i] = key_block[i] ^ 0x36;
  inner_ = kSha1Init;
  sha1_compress(inner_, pad);
  for (int i = 0; i < 64; ++i) pad[i] = key_block[i] ^ 0x5c;
  outer_ = kSha1Init;
  sha1_compress(outer_, pad);
}

void HmacSha1::mac(ByteView message, std::uint8_t out[20]) const {
  if (message.size() > 55)
    throw ValidationError("hmac kernel: message exceeds one block");
  std::uint8_t block[64] = {0};
  std::memcpy(block, message.data(), message.size());
  block[message.size()] = 0x80;
  put_be64(block + 56, (64 + message.size()) * 8);

  Sha1State st = inner_;
  sha1_compress(st, block);
  std::uint8_t inner_digest[20];
  state_to_digest(st, inner_digest);

  std::memset(block, 0, sizeof(block));
  std::memcpy(block, inner_digest, 20);
  block[20] = 0x80;
  put_be64(block + 56, (64 + 20) * 8);
  st = outer_;
  sha1_compress(st, block);
  state_to_digest(st, out);
}

void pbkdf2_hmac_sha1(ByteView password, ByteView salt,
                      std::uint32_t iterations, std::uint8_t* out,
                      std::size_t dklen) {
  if (iterations == 0) throw ValidationError("iterations must be >= 1");
  if (salt.size() > 51)
    throw ValidationError("pbkdf2 kernel: salt exceeds one block");
  HmacSha1 prf;
  prf.set_key(password);

  std::uint8_t salt_block[55];
  std::memcpy(salt_block, salt.data(), salt.size());

  std::uint32_t block_index = 1;
  std::size_t produced = 0;
  while (produced < dklen) {
    put_be32(salt_block + salt.size(), block_index);
    std::uint8_t u[20];
    prf.mac(ByteView(salt_block, salt.size() + 4), u);
    std::uint8_t t[20];
    std::memcpy(t, u, 20);
    for (std::uint32_t i = 1; i < iterations; ++i) {
      prf.mac(ByteView(u, 20), u);
      for (int k = 0; k < 20; ++k) t[k] ^= u[k];
    }
    const std::size_t take = std::min<std::size_t>(20, dklen - produced);
    std::memcpy(out + produced, t, take);
    produced += take;
    ++block_index;
  }
}

void candidate_login_hash(const std::string& ivote_id, const std::string& pin,
                          std::uint32_t iterations, std::uint8_t out[16]) {
  std::uint8_t pin_digest[32];
  sha256_short(ByteView(reinterpret_cast<const std::uint8_t*>(pin.data()),
                        pin.size()),
               pin_digest);
  // id + "," + Base64(SHA256(pin)) + "," + "voterid"
  std::string password;
  password.reserve(ivote_id.size() + 1 + 44 + 1 + 7);
  password += ivote_id;
  password += ',';
  char b64[44];
  b64_44(pin_digest, b64);
  password.append(b64, sizeof(b64));
  password += ",voterid";

  static constexpr std::uint8_t kLoginSalt[20] = {0};
  pbkdf2_hmac_sha1(
      ByteView(reinterpret_cast<const std::uint8_t*>(password.data()),
               password.size()),
      ByteView(kLoginSalt, sizeof(kLoginSalt)), iterations, out, 16);
}

}  // namespace ivote::bruteforce
