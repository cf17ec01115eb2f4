#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace ivote::sim {

// Everything a run needs; the seed fully determines simulation outcomes
// (benchmark rates are the only nondeterministic outputs and live in their
// own fields).
struct SimConfig {
  std::uint64_t seed = 1;
  int voters = 100;
  int pin_digits = 6;
  int id_digits = 8;
  int iterations = 8000;
  std::string proxy_mode = "off";  // off | passive
  int workers = 2;
  double time_budget_s = 0.0;  // 0 = unlimited; bounds attack cracking
  int targets = 1;             // sessions attacked in substitute/crack
  bool exercise_partials = true;
  bool revote_check = true;
  std::string transcripts_path;  // optional JSON Lines export

  void validate() const;
};

// register -> login -> partial -> resume -> cast -> verify for every voter,
// optionally through a passive proxy.
nlohmann::json run_simulate(const SimConfig& cfg);

// scenario: crack | inject | substitute | link | partials.
// The report's "success" field is the scenario's exit gate.
nlohmann::json run_attack(const SimConfig& cfg, const std::string& scenario);

}  // namespace ivote::sim
