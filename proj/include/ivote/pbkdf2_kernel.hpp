#pragma once

#include <cstddef>
#include <cstdint>

#include "ivote/bytes.hpp"

namespace ivote::bruteforce {

// Self-contained PBKDF2-HmacSHA1 kernel for the keyspace search. Plain
// portable C++ (no SHA extensions, no OpenSSL) so throughput reflects a
// straightforward threaded implementation. The HMAC ipad/opad states are
// precomputed once per candidate password, leaving two SHA-1 compressions
// per iteration.
struct Sha1State {
  std::uint32_t h[5];
};

void sha1_compress(Sha1State& state, const std::uint8_t block[64]);
void sha1(ByteView data, std::uint8_t out[20]);

class HmacSha1 {
 public:
  // Passwords longer than the block size are pre-hashed, per the HMAC spec.
  void set_key(ByteView key);

  // Message must fit one padded block (<= 55 bytes); PBKDF2 only ever macs
  // salt||counter and 20-byte U values.
  void mac(ByteView message, std::uint8_t out[20]) const;

 private:
  Sha1State inner_{};
  Sha1State outer_{};
};

// Arbitrary dklen (whole 20-byte blocks are concatenated and truncated);
// salt limited to 51 bytes so salt||INT(i) stays in one block.
void pbkdf2_hmac_sha1(ByteView password, ByteView salt, std::uint32_t iterations,
                      std::uint8_t* out, std::size_t dklen);

// One brute-force candidate: builds the "voterid" password string for
// (ivote_id, pin) and derives the 16-byte login hash.
void candidate_login_hash(const std::string& ivote_id, const std::string& pin,
                          std::uint32_t iterations, std::uint8_t out[16]);

}  // namespace ivote::bruteforce
