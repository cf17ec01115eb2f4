#include "ivote/server.hpp"

#include <algorithm>

#include "ivote/errors.hpp"

namespace ivote {

namespace {

constexpr std::size_t kChallengeLen = 16;
constexpr int kReceiptDigits = 12;
constexpr int kVoterKeysIdBytes = 12;

// The profiling script the provider serves with the login page. Unminified
// on purpose: the trailing comment is the slack a length-preserving rewrite
// consumes.
constexpr std::string_view kProfilingScript =
    "/* incap resource v7 */var f=fingerprint(document);utmvc.profile();"
    "send(f);/* rollout padding "
    "................................................ */";

bool all_decimal(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

std::string vkid_from_endpoint(const std::string& endpoint) {
  auto slash = endpoint.rfind('/');
  if (slash == std::string::npos) return {};
  auto query = endpoint.find('?', slash);
  if (query == std::string::npos) query = endpoint.size();
  return endpoint.substr(slash + 1, query - slash - 1);
}

}  // namespace

std::string extract_login_script(const std::string& html) {
  const auto open = html.find(kLoginScriptOpen);
  if (open == std::string::npos) throw ValidationError("page has no script");
  const auto start = open + kLoginScriptOpen.size();
  const auto close = html.find(kLoginScriptClose, start);
  if (close == std::string::npos) throw ValidationError("unterminated script");
  return html.substr(start, close - start);
}

Server::Server(ElectionConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed) {
  for (const auto& race : cfg_.races) {
    if (race.candidates.empty())
      throw ValidationError("race " + race.race_id + " has no candidates");
  }
  Rng key_rng = rng_.fork("server-keys");
  challenge_key_ = crypto::SigningKey::generate(key_rng);
  election_keys_ = crypto::KemKeyPair::generate(key_rng);
  login_page_ = "<html><head><title>iVote Core Voting System</title></head>"
                "<body><form id='login'><input id='iVoteID'/>"
                "<input id='PIN'/></form>";
  login_page_ += kLoginScriptOpen;
  login_page_ += kProfilingScript;
  login_page_ += kLoginScriptClose;
  login_page_ += "</body></html>";
}

Server::GeneratedCredential Server::generate_credential(
    const Credentials& creds) {
  validate_credentials(creds, cfg_.kdf);

  const Bytes vkid_raw = rng_.bytes(kVoterKeysIdBytes);
  const std::string voter_keys_id = hex_encode(vkid_raw);
  crypto::SigningKey sk = crypto::SigningKey::generate(rng_);

  CredentialFile cf;
  cf.vad.common_name = std::string(kVoterAuthPrefix) + voter_keys_id;
  cf.vad.public_key = sk.public_key();

  cf.vkp.salt = rng_.bytes(16);
  cf.vk.salt = rng_.bytes(16);
  const Bytes derived_password = rng_.bytes(32);
  const Key16 keystore_key =
      derive_keystore_password_key(creds, cf.vkp.salt, cfg_.kdf);
  cf.vkp.password = crypto::seal(keystore_key, rng_, derived_password);

  const Bytes long_password_bytes =
      crypto::pbkdf2_hmac_sha1(derived_password, cf.vk.salt, 1, crypto::kKeyLen);
  Key16 long_password;
  std::copy(long_password_bytes.begin(), long_password_bytes.end(),
            long_password.begin());

  const Key16 kp = rng_.key16();
  cf.vk.secrets["kp"] =
      crypto::seal(long_password, rng_, ByteView(kp.data(), kp.size()));
  cf.vk.store = crypto::seal(long_password, rng_, sk.seed());

  Bytes challenge = rng_.bytes(kChallengeLen);
  Bytes challenge_sig = challenge_key_.sign(challenge);
  cf.challenge_object = challenge;
  cf.challenge_object.insert(cf.challenge_object.end(), challenge_sig.begin(),
                             challenge_sig.end());

  GeneratedCredential out;
  out.file = std::move(cf);
  out.login_id = derive_login_id(creds, cfg_.kdf);
  out.voter_keys_id = voter_keys_id;
  out.verify_pk = sk.public_key();
  return out;
}

CredentialFile Server::make_credential_file(const Credentials& creds) {
  std::lock_guard lock(mu_);
  return generate_credential(creds).file;
}

std::string Server::register_voter(const std::string& identity,
                                   const std::string& pin) {
  (void)identity;  // eligibility checking is out of scope
  std::lock_guard lock(mu_);
  if (!all_decimal(pin) ||
      pin.size() != static_cast<std::size_t>(cfg_.kdf.pin_digits))
    throw ValidationError("pin must be " +
                          std::to_string(cfg_.kdf.pin_digits) +
                          " decimal digits");

  std::uint64_t id_space = 1;
  for (int i = 0; i < cfg_.kdf.id_digits; ++i) id_space *= 10;
  if (used_id_hashes_.size() >= id_space)
    throw CapacityError("ivote id space exhausted");

  std::string ivote_id;
  std::string id_hash;
  do {
    ivote_id = rng_.decimal_digits(cfg_.kdf.id_digits);
    id_hash = hex_encode(crypto::sha256(to_bytes(ivote_id)));
  } while (used_id_hashes_.contains(id_hash));
  used_id_hashes_.insert(id_hash);

  Credentials creds{ivote_id, pin};
  GeneratedCredential gen = generate_credential(creds);

  VoterRecord rec;
  rec.ivote_id_hash = id_hash;
  rec.login_id = gen.login_id;
  rec.credential_file = gen.file;
  rec.voter_keys_id = gen.voter_keys_id;
  rec.verify_pk = gen.verify_pk;
  vkid_index_[gen.voter_keys_id] = gen.login_id;
  voters_[gen.login_id] = std::move(rec);
  return ivote_id;
}

CredentialFile Server::lookup_credential(const std::string& login_id) {
  std::lock_guard lock(mu_);
  auto it = voters_.find(login_id);
  if (it == voters_.end()) throw NotFoundError("not-found");
  return it->second.credential_file;
}

VoterRecord& Server::by_vkid(const std::string& voter_keys_id) {
  auto it = vkid_index_.find(voter_keys_id);
  if (it == vkid_index_.end()) throw NotFoundError("not-found");
  return voters_.at(it->second);
}

TokenFile Server::issue_token(const std::string& voter_keys_id,
                              ByteView response, ByteView signature) {
  std::lock_guard lock(mu_);
  VoterRecord& rec = by_vkid(voter_keys_id);
  if (response.size() < kChallengeLen)
    throw AuthError("challenge response too short");
  ByteView expected(rec.credential_file.challenge_object.data(), kChallengeLen);
  if (!std::equal(expected.begin(), expected.end(), response.begin()))
    throw AuthError("challenge mismatch");
  if (!crypto::verify(rec.verify_pk, response, signature))
    throw AuthError("bad response signature");

  TokenFile token;
  token.election_public_key = election_keys_.public_key;
  token.races = cfg_.races;
  token.partial_votes = rec.partial_votes;
  return token;
}

void Server::store_partial_vote(const std::string& voter_keys_id,
                                const PartialVote& pv) {
  std::lock_guard lock(mu_);
  VoterRecord& rec = by_vkid(voter_keys_id);
  // The server never decrypts eo; it only checks the voter's signature.
  if (!crypto::verify(rec.verify_pk, pv.eo.serialize(), pv.signature))
    throw AuthError("bad partial vote signature");
  rec.partial_votes.push_back(pv.eo);
}

std::string Server::cast_ballot(const std::string& voter_keys_id,
                                const Ballot& ballot) {
  std::lock_guard lock(mu_);
  VoterRecord& rec = by_vkid(voter_keys_id);
  if (rec.final_ballot) throw AlreadyVotedError();
  if (!crypto::verify(rec.verify_pk, ballot.signed_payload(), ballot.signature))
    throw AuthError("bad ballot signature");

  std::string receipt;
  do {
    receipt = rng_.decimal_digits(kReceiptDigits);
  } while (used_receipts_.contains(receipt));
  used_receipts_.insert(receipt);

  rec.final_ballot = ballot;
  rec.receipt = receipt;
  return receipt;
}

PrefSet Server::verify_readback(const std::string& ivote_id,
                                const std::string& pin,
                                const std::string& receipt) {
  std::lock_guard lock(mu_);
  try {
    const std::string login_id =
        derive_login_id(Credentials{ivote_id, pin}, cfg_.kdf);
    auto it = voters_.find(login_id);
    if (it == voters_.end()) throw VerificationFailedError();
    const VoterRecord& rec = it->second;
    if (!rec.final_ballot || !rec.receipt || *rec.receipt != receipt)
      throw VerificationFailedError();
    const Key16 ballot_key = crypto::unwrap_key(election_keys_.private_key,
                                                rec.final_ballot->wrapped_key);
    const Bytes plain = crypto::unseal(ballot_key, rec.final_ballot->sealed_prefs);
    return decode_prefs(to_string(plain));
  } catch (const VerificationFailedError&) {
    throw;
  } catch (const Error&) {
    throw VerificationFailedError();
  }
}

Bytes Server::challenge_verify_key() const {
  return challenge_key_.public_key();
}

Bytes Server::election_public_key() const { return election_keys_.public_key; }

std::string Server::login_page_html() const { return login_page_; }

std::size_t Server::voter_count() const {
  std::lock_guard lock(mu_);
  return voters_.size();
}

json Server::dispatch(const Envelope& env) {
  const std::string& ep = env.endpoint;
  if (ep == ep_registration_visit()) {
    // Identity only; the PIN reaches the registrar out of band and the
    // iVoteID goes back by post or SMS, never over this channel.
    if (!env.body.contains("identity"))
      throw ValidationError("identity required");
    return json{{"message", "registration recorded; credentials follow by "
                            "independent channel"}};
  }
  if (ep == ep_login_page()) {
    return json{{"html", login_page_}};
  }
  if (ep == ep_login()) {
    const std::string voter_id = env.body.value("voter_id", "");
    if (voter_id.empty()) throw ValidationError("voter_id required");
    return json{{"credential_file", lookup_credential(voter_id).to_json()}};
  }
  if (is_token_endpoint(ep)) {
    const std::string vkid = vkid_from_endpoint(ep);
    Bytes response = base64_decode(env.body.at("response").get<std::string>());
    Bytes sig = base64_decode(env.body.at("signature").get<std::string>());
    return json{{"token", issue_token(vkid, response, sig).to_json()}};
  }
  if (is_partial_endpoint(ep)) {
    const std::string vkid = vkid_from_endpoint(ep);
    store_partial_vote(vkid, PartialVote::from_json(env.body));
    return json{{"stored", true}};
  }
  if (is_cast_endpoint(ep)) {
    const std::string vkid = vkid_from_endpoint(ep);
    return json{{"receipt", cast_ballot(vkid, Ballot::from_json(env.body))}};
  }
  throw NotFoundError("not-found");
}

std::string Server::handle_line(const std::string& line) {
  WireResponse resp;
  try {
    Envelope env = Envelope::from_line(line);
    resp.body = dispatch(env);
    resp.ok = true;
  } catch (const NotFoundError&) {
    resp.error = "not-found";
  } catch (const AlreadyVotedError&) {
    resp.error = "already-voted";
  } catch (const AuthError&) {
    resp.error = "auth-error";
  } catch (const MalformedFileError&) {
    resp.error = "malformed";
  } catch (const ValidationError&) {
    resp.error = "validation-error";
  } catch (const json::exception&) {
    resp.error = "validation-error";
  } catch (const Error&) {
    resp.error = "server-error";
  }
  return resp.to_line();
}

json Server::state_snapshot() const {
  std::lock_guard lock(mu_);
  json voters = json::array();
  for (const auto& [login_id, rec] : voters_) {
    json v{
        {"login_id", login_id},
        {"ivote_id_hash", rec.ivote_id_hash},
        {"voter_keys_id", rec.voter_keys_id},
        {"verify_pk", base64_encode(rec.verify_pk)},
        {"credential_file", rec.credential_file.to_json()},
    };
    json partials = json::array();
    for (const auto& pv : rec.partial_votes) partials.push_back(pv.to_base64());
    v["partial_votes"] = partials;
    if (rec.final_ballot) v["final_ballot"] = rec.final_ballot->to_json();
    if (rec.receipt) v["receipt"] = *rec.receipt;
    voters.push_back(std::move(v));
  }
  json races = json::array();
  for (const auto& r : cfg_.races)
    races.push_back(json{{"race_id", r.race_id}, {"candidates", r.candidates}});
  return json{
      {"voters", voters},
      {"races", races},
      {"election_public_key", base64_encode(election_keys_.public_key)},
  };
}

}  // namespace ivote
