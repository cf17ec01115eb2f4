#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivote {

using Bytes = std::vector<std::uint8_t>;
using Key16 = std::array<std::uint8_t, 16>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string hex_encode(ByteView data);
Bytes hex_decode(std::string_view hex);

// Strict base64 (standard alphabet, mandatory padding). Decoding rejects
// non-canonical trailing bits so that any single-byte change in an encoded
// string is observable.
std::string base64_encode(ByteView data);
Bytes base64_decode(std::string_view text);

// Deterministic byte source for everything the simulation randomizes:
// salts, nonces, keys, ids, receipts, preference shuffles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  std::uint64_t below(std::uint64_t bound);
  void fill(std::span<std::uint8_t> out);
  Bytes bytes(std::size_t n);
  Key16 key16();
  std::string decimal_digits(int n);

  // Independent child stream; forking consumes one draw from the parent.
  Rng fork(std::string_view tag);

  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }

 private:
  std::mt19937_64 engine_;
};

// Shared simulated wall clock (seconds). The proxy's cookie-lifetime rules
// and transcript timestamps run off this, never off real time.
class SimClock {
 public:
  double now() const { return now_.load(std::memory_order_relaxed); }
  void advance(double seconds) {
    double cur = now_.load(std::memory_order_relaxed);
    while (!now_.compare_exchange_weak(cur, cur + seconds)) {
    }
  }
  void set(double t) { now_.store(t, std::memory_order_relaxed); }

 private:
  std::atomic<double> now_{0.0};
};

}  // namespace ivote
