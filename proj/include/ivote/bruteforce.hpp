#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivote/credential.hpp"

namespace ivote::bruteforce {

// Candidate space for the (iVoteID, PIN) search. Enumeration order is
// PIN-major ascending within an id, ids ascending, so "candidates tried"
// counts are reproducible.
struct Keyspace {
  std::optional<std::string> fixed_id;  // known-ID attack when set
  int id_digits = 8;
  int pin_digits = 6;
  int iterations = 8000;

  std::uint64_t candidate_count() const;
  Credentials candidate(std::uint64_t index) const;
};

struct SpaceSize {
  std::uint64_t candidates = 0;
  std::uint64_t hash_operations = 0;  // candidates * iterations
  double log2_hash_operations = 0.0;
};

// Exact, overflow-checked arithmetic; throws ValidationError when the
// product exceeds 64 bits.
SpaceSize search_space_size(const Keyspace& ks);

// Contiguous candidate index range [begin, end).
struct WorkUnit {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

// Units exactly partition [0, total): no gap, no overlap.
std::vector<WorkUnit> partition_keyspace(std::uint64_t total, int units);

struct Progress {
  std::uint64_t candidates_tried = 0;
  double seconds = 0.0;
  double iteration_units_per_second = 0.0;
  std::uint64_t candidates_total = 0;
};

struct CrackOptions {
  int workers = 1;
  std::optional<double> time_budget_s;
  std::function<void(const Progress&)> on_progress;  // optional
};

struct CrackResult {
  std::optional<Credentials> creds;
  std::uint64_t candidates_tried = 0;
  bool exhausted = false;
  bool timed_out = false;
  double seconds = 0.0;
  double iteration_units_per_second = 0.0;

  nlohmann::json to_json() const;
};

// OpenMP keyspace search using the fast PBKDF2 kernel. Workers pull
// fixed-size chunks from a shared cursor and re-check the stop signal at
// chunk granularity (64 candidates, well under the 256-candidate bound).
// The result is the lowest-index match, independent of worker count.
CrackResult crack(const std::string& target_login_id, const Keyspace& ks,
                  const CrackOptions& options = {});

// Serial reference: same contract, one thread, evaluated through the
// OpenSSL-backed derive_login_id path. Kept for cross-checking the kernel
// and as the benchmark baseline.
CrackResult crack_serial(const std::string& target_login_id,
                         const Keyspace& ks,
                         std::optional<double> time_budget_s = {});

struct BenchReport {
  int workers = 0;
  std::uint64_t sample_candidates = 0;
  int iterations = 0;
  double seconds = 0.0;
  // Both accounting conventions: whole-PBKDF2 candidates per second, and
  // single PBKDF2/HMAC iteration units per second (rate = calls * iters).
  double pbkdf2_calls_per_second = 0.0;
  double iteration_units_per_second = 0.0;
  // Known-ID 6-digit-PIN recovery at the deployed 8000 iterations.
  double extrapolated_6digit_seconds = 0.0;
  double extrapolated_6digit_cost_usd = 0.0;
  double price_per_core_hour = 0.0;

  nlohmann::json to_json() const;

  // 10^6 PINs x 8000 iterations at the given iteration-unit rate.
  static double extrapolate_6digit_seconds(double iteration_units_per_second);
  static double cost_usd(double seconds, int cores, double price_per_core_hour);
};

// Measures real kernel throughput; everything except the measured rate is
// deterministic.
BenchReport benchmark(int workers, std::uint64_t sample_candidates,
                      int iterations = 8000,
                      double price_per_core_hour = 0.047);

}  // namespace ivote::bruteforce
