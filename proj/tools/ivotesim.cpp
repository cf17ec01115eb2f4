#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ivote/bruteforce.hpp"
#include "ivote/certscan.hpp"
#include "ivote/errors.hpp"
#include "ivote/sim.hpp"

namespace {

using ivote::sim::SimConfig;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitScenarioFailed = 1;
constexpr int kExitConfigError = 2;

struct OutputOptions {
  bool as_json = false;
  std::string out_path;
};

void emit(const json& report, const OutputOptions& out,
          const std::string& human_summary) {
  if (out.as_json)
    std::cout << report.dump(2) << "\n";
  else
    std::cout << human_summary;
  if (!out.out_path.empty()) {
    std::ofstream f(out.out_path);
    if (!f) throw ivote::ValidationError("cannot write " + out.out_path);
    f << report.dump(2) << "\n";
  }
}

// Config file values take precedence over flags; flags over defaults.
void apply_config_file(const std::string& path, SimConfig& cfg) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ivote::ValidationError("cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw ivote::ValidationError("config file is not valid JSON: " + path);
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("voters")) cfg.voters = j["voters"].get<int>();
  if (j.contains("pin_digits")) cfg.pin_digits = j["pin_digits"].get<int>();
  if (j.contains("id_digits")) cfg.id_digits = j["id_digits"].get<int>();
  if (j.contains("iterations")) cfg.iterations = j["iterations"].get<int>();
  if (j.contains("proxy")) cfg.proxy_mode = j["proxy"].get<std::string>();
  if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
  if (j.contains("targets")) cfg.targets = j["targets"].get<int>();
  if (j.contains("time_budget_s"))
    cfg.time_budget_s = j["time_budget_s"].get<double>();
  if (j.contains("transcripts"))
    cfg.transcripts_path = j["transcripts"].get<std::string>();
}

void add_sim_options(CLI::App* cmd, SimConfig& cfg, std::string& config_path) {
  cmd->add_option("--seed", cfg.seed, "simulation seed");
  cmd->add_option("--voters", cfg.voters, "number of voters");
  cmd->add_option("--pin-digits", cfg.pin_digits, "PIN length");
  cmd->add_option("--id-digits", cfg.id_digits, "iVote ID length");
  cmd->add_option("--iterations", cfg.iterations, "PBKDF2 iteration count");
  cmd->add_option("--workers", cfg.workers, "worker threads");
  cmd->add_option("--transcripts", cfg.transcripts_path,
                  "write proxy transcripts (JSON Lines) to this path");
  cmd->add_option("--config", config_path,
                  "JSON config file; overrides any flag it names");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Desk-scale reconstruction of the iVote front-end protocol and the "
      "interception attacks enabled by a cloud TLS proxy"};
  app.require_subcommand(1);

  OutputOptions out;
  app.add_flag("--json", out.as_json, "print the JSON report to stdout");
  app.add_option("--out", out.out_path, "also write the JSON report here");

  SimConfig cfg;
  std::string config_path;

  auto* simulate = app.add_subcommand("simulate", "run an honest election");
  add_sim_options(simulate, cfg, config_path);
  simulate->add_option("--proxy", cfg.proxy_mode,
                       "proxy mode: off or passive");

  auto* attack = app.add_subcommand("attack", "run an attack scenario");
  std::string scenario;
  attack
      ->add_option("--scenario", scenario,
                   "crack | inject | substitute | link | partials")
      ->required();
  add_sim_options(attack, cfg, config_path);
  attack->add_option("--targets", cfg.targets, "sessions to attack");
  attack->add_option("--time-budget", cfg.time_budget_s,
                     "crack time budget in seconds (0 = unlimited)");

  auto* bench = app.add_subcommand("bench", "measure PBKDF2 throughput");
  int bench_workers = 2;
  std::uint64_t bench_sample = 400;
  int bench_iterations = 8000;
  double price = 0.047;
  bench->add_option("--workers", bench_workers, "worker threads");
  bench->add_option("--sample", bench_sample, "candidates to evaluate");
  bench->add_option("--iterations", bench_iterations, "PBKDF2 iterations");
  bench->add_option("--price-per-core-hour", price,
                    "USD price used for cost extrapolation");

  auto* scan = app.add_subcommand("scan", "TLS certificate footprint scan");
  std::string endpoints_path;
  std::string target;
  int parallelism = 8;
  double timeout_s = 5.0;
  bool fail_on_coverage = false;
  scan->add_option("--endpoints", endpoints_path,
                   "file with one host[:port] per line")
      ->required();
  scan->add_option("--target", target, "FQDN to test SAN coverage against")
      ->required();
  scan->add_option("--parallelism", parallelism, "concurrent handshakes");
  scan->add_option("--timeout", timeout_s, "per-endpoint timeout (seconds)");
  scan->add_flag("--fail-on-coverage", fail_on_coverage,
                 "exit nonzero if any scanned cert covers the target");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    apply_config_file(config_path, cfg);

    if (*simulate) {
      json report = ivote::sim::run_simulate(cfg);
      const auto& s = report["summary"];
      std::string human =
          "simulate: " + std::to_string(s["voters"].get<int>()) + " voters, " +
          std::to_string(s["readback_failures"].get<int>()) +
          " read-back failures, " +
          std::to_string(s["revote_failures"].get<int>()) +
          " re-vote failures, receipts unique: " +
          (s["receipts_unique"].get<bool>() ? "yes" : "no") + "\n";
      emit(report, out, human);
      return report["success"].get<bool>() ? kExitOk : kExitScenarioFailed;
    }

    if (*attack) {
      json report = ivote::sim::run_attack(cfg, scenario);
      std::string human = "attack " + scenario + ": " +
                          report["summary"].dump() + "\nsuccess: " +
                          (report["success"].get<bool>() ? "yes" : "no") + "\n";
      emit(report, out, human);
      return report["success"].get<bool>() ? kExitOk : kExitScenarioFailed;
    }

    if (*bench) {
      auto report =
          ivote::bruteforce::benchmark(bench_workers, bench_sample,
                                       bench_iterations, price);
      json j = report.to_json();
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "bench: %d workers, %.0f PBKDF2 calls/s, %.3g "
                    "iteration-units/s\n6-digit known-ID crack: %.1f min, "
                    "$%.3f at $%.3f/core-hour\n",
                    report.workers, report.pbkdf2_calls_per_second,
                    report.iteration_units_per_second,
                    report.extrapolated_6digit_seconds / 60.0,
                    report.extrapolated_6digit_cost_usd,
                    report.price_per_core_hour);
      emit(j, out, buf);
      return kExitOk;
    }

    if (*scan) {
      auto endpoints = ivote::certscan::load_endpoints_file(endpoints_path);
      auto report = ivote::certscan::footprint_report(endpoints, target,
                                                      parallelism, timeout_s);
      json j = report.to_json();
      std::string human = "scan: " + std::to_string(endpoints.size()) +
                          " endpoints, " +
                          std::to_string(report.clusters.size()) +
                          " certificate clusters, " +
                          std::to_string(report.failures.size()) +
                          " failures\ntarget " + target + " covered: " +
                          (report.target_covered() ? "yes" : "no") + "\n";
      emit(j, out, human);
      if (fail_on_coverage && report.target_covered())
        return kExitScenarioFailed;
      return kExitOk;
    }
  } catch (const ivote::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitScenarioFailed;
  }
  return kExitConfigError;
}
