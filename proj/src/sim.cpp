#include "ivote/sim.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "ivote/client.hpp"
#include "ivote/errors.hpp"
#include "ivote/proxy.hpp"
#include "ivote/server.hpp"
#include "ivote/transport.hpp"

namespace ivote::sim {

namespace {

using nlohmann::json;

struct PlantedVoter {
  std::string identity;
  Credentials creds;
  PrefSet final_prefs;
  std::string receipt;
  std::uint64_t vote_session = 0;
};

ElectionConfig election_config(const SimConfig& cfg) {
  ElectionConfig ec;
  ec.kdf.iterations = cfg.iterations;
  ec.kdf.id_digits = cfg.id_digits;
  ec.kdf.pin_digits = cfg.pin_digits;
  return ec;
}

ClientConfig client_config(const SimConfig& cfg) {
  ClientConfig cc;
  cc.kdf.iterations = cfg.iterations;
  cc.kdf.id_digits = cfg.id_digits;
  cc.kdf.pin_digits = cfg.pin_digits;
  return cc;
}

PreferenceVector shuffled_race(Rng& rng, const Race& race,
                               std::size_t keep = SIZE_MAX) {
  auto cands = race.candidates;
  rng.shuffle(cands.begin(), cands.end());
  if (keep < cands.size()) cands.resize(keep);
  return PreferenceVector{race.race_id, cands};
}

PrefSet full_prefs(Rng& rng, const std::vector<Race>& races) {
  PrefSet out;
  for (const auto& race : races) out.push_back(shuffled_race(rng, race));
  return out;
}

// Attacker's choice: every race ranked in reverse candidate-list order,
// distinct from almost any voter shuffle and trivially recognizable.
PrefSet attacker_prefs_for(const std::vector<Race>& races) {
  PrefSet out;
  for (const auto& race : races) {
    auto cands = race.candidates;
    std::reverse(cands.begin(), cands.end());
    out.push_back(PreferenceVector{race.race_id, cands});
  }
  return out;
}

json config_echo(const SimConfig& cfg) {
  return json{
      {"seed", cfg.seed},           {"voters", cfg.voters},
      {"pin_digits", cfg.pin_digits}, {"id_digits", cfg.id_digits},
      {"iterations", cfg.iterations}, {"proxy", cfg.proxy_mode},
      {"workers", cfg.workers},     {"targets", cfg.targets},
      {"time_budget_s", cfg.time_budget_s},
  };
}

void export_transcripts(const SimConfig& cfg, const Proxy& proxy) {
  if (cfg.transcripts_path.empty()) return;
  std::ofstream out(cfg.transcripts_path);
  if (!out)
    throw ValidationError("cannot write transcripts: " + cfg.transcripts_path);
  out << proxy.export_jsonl();
}

}  // namespace

void SimConfig::validate() const {
  if (voters < 1) throw ValidationError("voters must be >= 1");
  if (pin_digits < 1 || pin_digits > 9)
    throw ValidationError("pin_digits must be in 1..9");
  if (id_digits < 1 || id_digits > 9)
    throw ValidationError("id_digits must be in 1..9");
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  if (workers < 1) throw ValidationError("workers must be >= 1");
  if (targets < 0) throw ValidationError("targets must be >= 0");
  if (proxy_mode != "off" && proxy_mode != "passive")
    throw ValidationError("proxy mode must be off or passive");
}

json run_simulate(const SimConfig& cfg) {
  cfg.validate();
  Rng master(cfg.seed);
  Rng server_rng = master.fork("server");
  Rng proxy_rng = master.fork("proxy");
  SimClock clock;

  Server server(election_config(cfg), server_rng.next_u64());
  InProcessTransport direct(server);

  const bool proxied = cfg.proxy_mode == "passive";
  AttackConfig attack;  // defaults: passive logging only
  attack.kdf = election_config(cfg).kdf;
  Proxy proxy(direct, attack, clock, std::move(proxy_rng));

  json voters = json::array();
  std::set<std::string> receipts;
  int readback_failures = 0;
  int revote_failures = 0;
  int resume_failures = 0;

  for (int i = 0; i < cfg.voters; ++i) {
    const std::string identity = "voter-" + std::to_string(i);
    Rng voter_rng = master.fork("voter:" + std::to_string(i));
    const std::string pin = voter_rng.decimal_digits(cfg.pin_digits);

    Proxy::SessionHandle handle;
    if (proxied) handle = proxy.open_session();
    Transport& transport = proxied ? *handle.transport : direct;

    Client client(transport, clock, voter_rng.fork("browser"),
                  server.challenge_verify_key(), client_config(cfg));
    client.visit_registration(identity);
    const std::string ivote_id = server.register_voter(identity, pin);
    const Credentials creds{ivote_id, pin};

    client.fetch_login_page();
    client.login(creds);

    bool resume_ok = true;
    if (cfg.exercise_partials) {
      PreferenceVector partial =
          shuffled_race(voter_rng, server.races().front(),
                        server.races().front().candidates.size() - 1);
      client.save_partial(partial);
      auto resumed = client.resume();
      resume_ok = resumed.has_value() && resumed->size() == 1 &&
                  (*resumed)[0] == partial;
    }

    const PrefSet final_prefs = full_prefs(voter_rng, server.races());
    const std::string receipt = client.cast(final_prefs);
    receipts.insert(receipt);

    bool readback_ok = false;
    try {
      readback_ok = server.verify_readback(ivote_id, pin, receipt) == final_prefs;
    } catch (const VerificationFailedError&) {
    }

    bool revote_rejected = true;
    if (cfg.revote_check) {
      try {
        client.cast(final_prefs);
        revote_rejected = false;
      } catch (const AlreadyVotedError&) {
      }
    }

    if (!readback_ok) ++readback_failures;
    if (!revote_rejected) ++revote_failures;
    if (!resume_ok) ++resume_failures;
    voters.push_back(json{
        {"identity", identity},
        {"receipt", receipt},
        {"readback_ok", readback_ok},
        {"resume_ok", resume_ok},
        {"revote_rejected", revote_rejected},
    });
    clock.advance(1.0);
  }

  export_transcripts(cfg, proxy);

  const bool receipts_unique =
      receipts.size() == static_cast<std::size_t>(cfg.voters);
  const bool ok = readback_failures == 0 && revote_failures == 0 &&
                  resume_failures == 0 && receipts_unique;
  return json{
      {"command", "simulate"},
      {"config", config_echo(cfg)},
      {"voters", voters},
      {"summary",
       {{"voters", cfg.voters},
        {"receipts_unique", receipts_unique},
        {"readback_failures", readback_failures},
        {"resume_failures", resume_failures},
        {"revote_failures", revote_failures}}},
      {"success", ok},
  };
}

namespace {

json run_crack_scenario(const SimConfig& cfg) {
  Rng master(cfg.seed);
  Rng server_rng = master.fork("server");
  Rng proxy_rng = master.fork("proxy");
  SimClock clock;
  Server server(election_config(cfg), server_rng.next_u64());
  InProcessTransport direct(server);

  AttackConfig attack;
  attack.kdf = election_config(cfg).kdf;
  attack.crack.workers = cfg.workers;
  if (cfg.time_budget_s > 0) attack.crack.time_budget_s = cfg.time_budget_s;
  bruteforce::Progress last_progress;
  attack.crack.on_progress = [&](const bruteforce::Progress& p) {
    last_progress = p;
  };
  Proxy proxy(direct, attack, clock, std::move(proxy_rng));

  const int targets = std::min(std::max(cfg.targets, 1), cfg.voters);
  json results = json::array();
  int recovered = 0;
  for (int i = 0; i < cfg.voters; ++i) {
    const std::string identity = "voter-" + std::to_string(i);
    Rng voter_rng = master.fork("voter:" + std::to_string(i));
    const std::string pin = voter_rng.decimal_digits(cfg.pin_digits);
    const std::string ivote_id = server.register_voter(identity, pin);

    auto handle = proxy.open_session();
    Client client(*handle.transport, clock, voter_rng.fork("browser"),
                  server.challenge_verify_key(), client_config(cfg));
    client.login(Credentials{ivote_id, pin});

    if (i >= targets) continue;
    json item{{"identity", identity}, {"session", handle.id}};
    try {
      // Known-ID assumption: the interceptor learned the id by watching
      // registration traffic and correlating addresses.
      Credentials found =
          proxy.crack_session(proxy.transcript(handle.id), ivote_id);
      item["recovered"] = true;
      item["matches_planted"] = found == Credentials{ivote_id, pin};
      ++recovered;
    } catch (const Error& e) {
      item["recovered"] = false;
      item["error"] = e.what();
      item["candidates_tried"] = last_progress.candidates_tried;
      item["candidates_total"] = last_progress.candidates_total;
      item["seconds"] = last_progress.seconds;
    }
    results.push_back(std::move(item));
  }
  export_transcripts(cfg, proxy);

  return json{
      {"command", "attack"},
      {"scenario", "crack"},
      {"config", config_echo(cfg)},
      {"targets", results},
      {"summary", {{"targeted", targets}, {"recovered", recovered}}},
      {"success", recovered == targets},
  };
}

json run_inject_scenario(const SimConfig& cfg) {
  Rng master(cfg.seed);
  Rng server_rng = master.fork("server");
  Rng proxy_rng = master.fork("proxy");
  SimClock clock;
  Server server(election_config(cfg), server_rng.next_u64());
  InProcessTransport direct(server);

  AttackConfig attack;
  attack.kdf = election_config(cfg).kdf;
  attack.inject = true;
  attack.payload = InjectionPayload::credential_leak(
      extract_login_script(server.login_page_html()));
  Proxy proxy(direct, attack, clock, std::move(proxy_rng));

  json sessions = json::array();
  int harvested = 0;
  int matched = 0;
  for (int i = 0; i < cfg.voters; ++i) {
    const std::string identity = "voter-" + std::to_string(i);
    Rng voter_rng = master.fork("voter:" + std::to_string(i));
    const std::string pin = voter_rng.decimal_digits(cfg.pin_digits);
    const std::string ivote_id = server.register_voter(identity, pin);

    auto handle = proxy.open_session();
    Client client(*handle.transport, clock, voter_rng.fork("browser"),
                  server.challenge_verify_key(), client_config(cfg));
    client.fetch_login_page();
    client.login(Credentials{ivote_id, pin});
    clock.advance(1.0);

    auto leaked = proxy.harvest_credentials(proxy.transcript(handle.id));
    json item{{"identity", identity}, {"session", handle.id}};
    item["harvested"] = leaked.size();
    if (!leaked.empty()) {
      ++harvested;
      if (leaked.front() == Credentials{ivote_id, pin}) ++matched;
    }
    sessions.push_back(std::move(item));
  }
  export_transcripts(cfg, proxy);

  return json{
      {"command", "attack"},
      {"scenario", "inject"},
      {"config", config_echo(cfg)},
      {"sessions", sessions},
      {"summary",
       {{"voters", cfg.voters}, {"harvested", harvested}, {"matched", matched}}},
      {"success", harvested == cfg.voters && matched == cfg.voters},
  };
}

json run_substitute_scenario(const SimConfig& cfg) {
  Rng master(cfg.seed);
  Rng server_rng = master.fork("server");
  Rng proxy_rng = master.fork("proxy");
  SimClock clock;
  Server server(election_config(cfg), server_rng.next_u64());
  InProcessTransport direct(server);

  AttackConfig attack;
  attack.kdf = election_config(cfg).kdf;
  attack.substitute = true;
  attack.crack.workers = cfg.workers;
  if (cfg.time_budget_s > 0) attack.crack.time_budget_s = cfg.time_budget_s;
  Proxy proxy(direct, attack, clock, std::move(proxy_rng));

  const PrefSet attacker = attacker_prefs_for(server.races());
  const int targets = std::min(cfg.targets, cfg.voters);

  int substituted = 0;
  int attacker_readbacks = 0;
  int honest_readbacks = 0;
  json per_voter = json::array();

  for (int i = 0; i < cfg.voters; ++i) {
    const std::string identity = "voter-" + std::to_string(i);
    Rng voter_rng = master.fork("voter:" + std::to_string(i));
    const std::string pin = voter_rng.decimal_digits(cfg.pin_digits);
    const std::string ivote_id = server.register_voter(identity, pin);
    const bool targeted = i < targets;

    auto handle = proxy.open_session();
    Client client(*handle.transport, clock, voter_rng.fork("browser"),
                  server.challenge_verify_key(), client_config(cfg));
    client.login(Credentials{ivote_id, pin});

    bool armed = false;
    if (targeted) {
      proxy.crack_session(proxy.transcript(handle.id), ivote_id);
      proxy.substitute_ballot(handle.id, attacker);
      armed = true;
    }

    const PrefSet voter_prefs = full_prefs(voter_rng, server.races());
    const std::string receipt = client.cast(voter_prefs);

    // The voter's receipt is genuine either way; only the read-back can
    // reveal the swap.
    PrefSet readback = server.verify_readback(ivote_id, pin, receipt);
    const bool got_attacker = readback == attacker;
    const bool got_own = readback == voter_prefs;
    if (armed && got_attacker) {
      ++substituted;
      ++attacker_readbacks;
    } else if (!armed && got_own) {
      ++honest_readbacks;
    }
    per_voter.push_back(json{{"identity", identity},
                             {"targeted", targeted},
                             {"receipt", receipt},
                             {"readback_is_attacker", got_attacker},
                             {"readback_is_own", got_own}});
    clock.advance(1.0);
  }
  export_transcripts(cfg, proxy);

  const bool ok = substituted == targets && attacker_readbacks == targets &&
                  honest_readbacks == cfg.voters - targets;
  return json{
      {"command", "attack"},
      {"scenario", "substitute"},
      {"config", config_echo(cfg)},
      {"voters", per_voter},
      {"summary",
       {{"voters", cfg.voters},
        {"targeted", targets},
        {"substituted", substituted},
        {"attacker_readbacks", attacker_readbacks},
        {"honest_readbacks", honest_readbacks}}},
      {"success", ok},
  };
}

json run_partials_scenario(const SimConfig& cfg) {
  Rng master(cfg.seed);
  Rng server_rng = master.fork("server");
  Rng proxy_rng = master.fork("proxy");
  SimClock clock;
  Server server(election_config(cfg), server_rng.next_u64());
  InProcessTransport direct(server);

  AttackConfig attack;
  attack.kdf = election_config(cfg).kdf;
  attack.crack.workers = cfg.workers;
  Proxy proxy(direct, attack, clock, std::move(proxy_rng));

  json voters_j = json::array();
  int exposed = 0;
  for (int i = 0; i < cfg.voters; ++i) {
    const std::string identity = "voter-" + std::to_string(i);
    Rng voter_rng = master.fork("voter:" + std::to_string(i));
    const std::string pin = voter_rng.decimal_digits(cfg.pin_digits);
    const std::string ivote_id = server.register_voter(identity, pin);

    auto handle = proxy.open_session();
    Client client(*handle.transport, clock, voter_rng.fork("browser"),
                  server.challenge_verify_key(), client_config(cfg));
    client.login(Credentials{ivote_id, pin});

    // Two saves on the same screen: a partial ranking, then the completed
    // one the voter finally casts.
    const Race& race = server.races().front();
    PreferenceVector p1 =
        shuffled_race(voter_rng, race, race.candidates.size() - 1);
    client.save_partial(p1);
    PreferenceVector p2 = shuffled_race(voter_rng, race);
    client.save_partial(p2);
    const PrefSet cast_prefs{p2};
    client.cast(cast_prefs);

    Credentials found =
        proxy.crack_session(proxy.transcript(handle.id), ivote_id);
    auto partials =
        proxy.decrypt_partials(proxy.transcript(handle.id), found);

    const bool ok = partials.size() == 2 && partials[0].ok && partials[1].ok &&
                    partials[0].prefs == PrefSet{p1} &&
                    partials[1].prefs == PrefSet{p2} &&
                    partials.back().prefs == cast_prefs;
    if (ok) ++exposed;
    voters_j.push_back(json{{"identity", identity},
                            {"partials_recovered", partials.size()},
                            {"last_equals_cast", ok}});
    clock.advance(1.0);
  }
  export_transcripts(cfg, proxy);

  return json{
      {"command", "attack"},
      {"scenario", "partials"},
      {"config", config_echo(cfg)},
      {"voters", voters_j},
      {"summary", {{"voters", cfg.voters}, {"exposed", exposed}}},
      {"success", exposed == cfg.voters},
  };
}

json run_link_scenario(const SimConfig& cfg) {
  Rng master(cfg.seed);
  Rng server_rng = master.fork("server");
  Rng proxy_rng = master.fork("proxy");
  SimClock clock;
  Server server(election_config(cfg), server_rng.next_u64());
  InProcessTransport direct(server);

  AttackConfig attack;
  attack.kdf = election_config(cfg).kdf;
  Proxy proxy(direct, attack, clock, std::move(proxy_rng));

  std::map<std::string, std::uint64_t> truth;
  for (int i = 0; i < cfg.voters; ++i) {
    const std::string identity = "voter-" + std::to_string(i);
    Rng voter_rng = master.fork("voter:" + std::to_string(i));
    const std::string pin = voter_rng.decimal_digits(cfg.pin_digits);

    // Same browser, two separate proxied connections: one to register,
    // one to vote.
    auto reg = proxy.open_session();
    Client client(*reg.transport, clock, voter_rng.fork("browser"),
                  server.challenge_verify_key(), client_config(cfg));
    client.visit_registration(identity);
    const std::string ivote_id = server.register_voter(identity, pin);
    clock.advance(5.0);

    auto vote = proxy.open_session();
    client.use_transport(*vote.transport);
    client.login(Credentials{ivote_id, pin});
    client.cast(full_prefs(voter_rng, server.races()));
    truth[identity] = vote.id;
    clock.advance(1.0);
  }

  const auto linked = proxy.link_sessions();
  int correct = 0;
  for (const auto& [identity, session] : linked) {
    auto it = truth.find(identity);
    if (it != truth.end() && it->second == session) ++correct;
  }
  export_transcripts(cfg, proxy);

  const bool ok = linked.size() == truth.size() &&
                  correct == static_cast<int>(truth.size());
  json linked_j = json::object();
  for (const auto& [identity, session] : linked)
    linked_j[identity] = session;
  return json{
      {"command", "attack"},
      {"scenario", "link"},
      {"config", config_echo(cfg)},
      {"linked", linked_j},
      {"summary",
       {{"voters", cfg.voters},
        {"linked", linked.size()},
        {"correct", correct}}},
      {"success", ok},
  };
}

}  // namespace

json run_attack(const SimConfig& cfg, const std::string& scenario) {
  cfg.validate();
  if (scenario == "crack") return run_crack_scenario(cfg);
  if (scenario == "inject") return run_inject_scenario(cfg);
  if (scenario == "substitute") return run_substitute_scenario(cfg);
  if (scenario == "partials") return run_partials_scenario(cfg);
  if (scenario == "link") return run_link_scenario(cfg);
  throw ValidationError("unknown scenario: " + scenario);
}

}  // namespace ivote::sim
