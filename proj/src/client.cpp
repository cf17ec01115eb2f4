#include "ivote/client.hpp"

#include <algorithm>
#include <set>

#include "ivote/errors.hpp"

namespace ivote {

namespace {

constexpr std::size_t kChallengeLen = 16;
constexpr std::size_t kClientNonceLen = 16;

void throw_wire_error(const WireResponse& r, const std::string& what) {
  if (r.ok) return;
  if (r.error == "not-found") throw NotFoundError(what + ": not-found");
  if (r.error == "already-voted") throw AlreadyVotedError();
  if (r.error == "auth-error") throw AuthError(what + ": rejected");
  if (r.error == "validation-error") throw ValidationError(what + ": invalid");
  if (r.error == "malformed") throw MalformedFileError(what + ": malformed");
  throw Error(what + ": " + r.error);
}

void validate_against_races(const PreferenceVector& pv,
                            const std::vector<Race>& races) {
  auto race = std::find_if(races.begin(), races.end(), [&](const Race& r) {
    return r.race_id == pv.race_id;
  });
  if (race == races.end())
    throw ValidationError("unknown race " + pv.race_id);
  std::set<std::string> seen;
  for (const auto& cand : pv.candidates) {
    if (std::find(race->candidates.begin(), race->candidates.end(), cand) ==
        race->candidates.end())
      throw ValidationError("candidate " + cand + " not in race " + pv.race_id);
    if (!seen.insert(cand).second)
      throw ValidationError("duplicate candidate " + cand);
  }
}

}  // namespace

Client::Client(Transport& transport, SimClock& clock, Rng rng,
               Bytes server_verify_pk, ClientConfig cfg)
    : transport_(&transport),
      clock_(clock),
      rng_(std::move(rng)),
      server_verify_pk_(std::move(server_verify_pk)),
      cfg_(cfg) {
  visid_ = hex_encode(rng_.bytes(10));
}

WireResponse Client::post(Envelope env) {
  env.cookies["visid"] = visid_;
  if (utmvc_) {
    // The browser drops the profiling cookie once its lifetime elapses.
    if (clock_.now() <= utmvc_->set_at + cfg_.profile_cookie_lifetime_s)
      env.cookies["__utmvc"] = utmvc_->value;
    else
      utmvc_.reset();
  }
  return transport_->post(env);
}

void Client::reset_session() {
  creds_.reset();
  key_material_.reset();
  token_.reset();
  token_challenge_.clear();
  entered_.clear();
  receipt_.reset();
}

void Client::visit_registration(const std::string& identity) {
  Envelope env;
  env.endpoint = ep_registration_visit();
  env.body = json{{"identity", identity}};
  throw_wire_error(post(std::move(env)), "registration");
}

void Client::fetch_login_page() {
  Envelope env;
  env.endpoint = ep_login_page();
  WireResponse resp = post(std::move(env));
  throw_wire_error(resp, "login page");
  const std::string html = resp.body.value("html", "");
  profiling_active_ = html.find(kDirectiveProfile) != std::string::npos;
  leak_creds_ = html.find(kDirectiveLeakCreds) != std::string::npos;
  if (profiling_active_) {
    ProfileCookie cookie;
    cookie.set_at = clock_.now();
    cookie.value = json{
        {"fp", hex_encode(crypto::sha256(to_bytes(visid_))).substr(0, 16)},
        {"set_at", cookie.set_at},
    };
    utmvc_ = std::move(cookie);
  }
}

void Client::login(const Credentials& creds) {
  reset_session();
  const std::string login_id = derive_login_id(creds, cfg_.kdf);

  // Injected onChange listeners copy the entered values into the profiling
  // cookie; the modeled client honors the directive it saw on the page.
  if (leak_creds_ && utmvc_ &&
      clock_.now() <= utmvc_->set_at + cfg_.profile_cookie_lifetime_s) {
    utmvc_->value["id"] = creds.ivote_id;
    utmvc_->value["pin"] = creds.pin;
  }

  Envelope login_env;
  login_env.endpoint = ep_login();
  login_env.body = json{{"voter_id", login_id}};
  WireResponse resp = post(std::move(login_env));
  if (!resp.ok) throw NotFoundError("login failed");

  if (!resp.body.contains("credential_file"))
    throw MalformedFileError("login response lacks credential file");
  const CredentialFile cf = CredentialFile::from_json(resp.body["credential_file"]);
  KeyMaterial km = open_credential_file(creds, cf, cfg_.kdf);

  // Authenticate the server before signing anything.
  if (cf.challenge_object.size() < kChallengeLen + crypto::kEd25519SigLen)
    throw AuthError("challenge object too short");
  const ByteView challenge(cf.challenge_object.data(), kChallengeLen);
  const ByteView challenge_sig(
      cf.challenge_object.data() + cf.challenge_object.size() -
          crypto::kEd25519SigLen,
      crypto::kEd25519SigLen);
  if (!crypto::verify(server_verify_pk_, challenge, challenge_sig))
    throw AuthError("server challenge signature invalid");

  Bytes response(challenge.begin(), challenge.end());
  Bytes nonce = rng_.bytes(kClientNonceLen);
  response.insert(response.end(), nonce.begin(), nonce.end());
  Bytes response_sig = km.sk.sign(response);

  Envelope token_env;
  token_env.endpoint = ep_token(km.voter_keys_id);
  token_env.voter_keys_id = km.voter_keys_id;
  token_env.body = json{{"response", base64_encode(response)},
                        {"signature", base64_encode(response_sig)}};
  WireResponse token_resp = post(std::move(token_env));
  throw_wire_error(token_resp, "token");
  if (!token_resp.body.contains("token"))
    throw MalformedFileError("token response empty");
  TokenFile token = TokenFile::from_json(token_resp.body["token"]);

  // Commit the session only once the whole handshake succeeded.
  creds_ = creds;
  key_material_ = std::move(km);
  token_challenge_.assign(challenge.begin(), challenge.end());
  token_ = std::move(token);
}

void Client::refresh_token() {
  const KeyMaterial& km = *key_material_;
  // The stored challenge does not change between token requests; replay it
  // with a fresh nonce.
  Bytes response = token_challenge_;
  Bytes nonce = rng_.bytes(kClientNonceLen);
  response.insert(response.end(), nonce.begin(), nonce.end());
  Bytes sig = km.sk.sign(response);

  Envelope env;
  env.endpoint = ep_token(km.voter_keys_id);
  env.voter_keys_id = km.voter_keys_id;
  env.body = json{{"response", base64_encode(response)},
                  {"signature", base64_encode(sig)}};
  WireResponse resp = post(std::move(env));
  throw_wire_error(resp, "token refresh");
  token_ = TokenFile::from_json(resp.body.at("token"));
}

void Client::save_partial(const PreferenceVector& prefs) {
  if (!logged_in()) throw PreconditionError("not logged in");
  validate_against_races(prefs, token_->races);

  auto merged = entered_;
  merged[prefs.race_id] = prefs;
  PrefSet all;
  for (const auto& [race, pv] : merged) all.push_back(pv);

  const std::string plain = encode_prefs(all);
  PartialVote pv;
  pv.eo = crypto::seal(key_material_->kp, rng_, to_bytes(plain));
  pv.signature = key_material_->sk.sign(pv.eo.serialize());

  Envelope env;
  env.endpoint = ep_partial_vote(key_material_->voter_keys_id);
  env.voter_keys_id = key_material_->voter_keys_id;
  env.body = pv.to_json();
  throw_wire_error(post(std::move(env)), "partial vote");
  entered_ = std::move(merged);
}

std::optional<PrefSet> Client::resume() {
  if (!logged_in()) throw PreconditionError("not logged in");
  refresh_token();
  if (token_->partial_votes.empty()) return std::nullopt;
  Bytes plain;
  try {
    plain = crypto::unseal(key_material_->kp, token_->partial_votes.back());
  } catch (const AuthError&) {
    throw CorruptPartialError("latest partial vote failed authentication");
  }
  PrefSet prefs = decode_prefs(to_string(plain));
  entered_.clear();
  for (const auto& pv : prefs) entered_[pv.race_id] = pv;
  return prefs;
}

std::string Client::cast(const PrefSet& prefs) {
  if (!logged_in()) throw PreconditionError("not logged in");
  for (const auto& pv : prefs) validate_against_races(pv, token_->races);

  const Key16 ballot_key = rng_.key16();
  Ballot ballot;
  ballot.sealed_prefs =
      crypto::seal(ballot_key, rng_, to_bytes(encode_prefs(prefs)));
  ballot.wrapped_key =
      crypto::wrap_key(token_->election_public_key, ballot_key, rng_);
  ballot.signature = key_material_->sk.sign(ballot.signed_payload());

  Envelope env;
  env.endpoint = ep_cast(key_material_->voter_keys_id);
  env.voter_keys_id = key_material_->voter_keys_id;
  env.body = ballot.to_json();
  WireResponse resp = post(std::move(env));
  throw_wire_error(resp, "cast");
  receipt_ = resp.body.value("receipt", "");
  return *receipt_;
}

const TokenFile& Client::token() const {
  if (!token_) throw PreconditionError("no token");
  return *token_;
}

const std::string& Client::voter_keys_id() const {
  if (!key_material_) throw PreconditionError("not logged in");
  return key_material_->voter_keys_id;
}

const PrefSet Client::entered_prefs() const {
  PrefSet out;
  for (const auto& [race, pv] : entered_) out.push_back(pv);
  return out;
}

}  // namespace ivote
