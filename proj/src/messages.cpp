#include "ivote/messages.hpp"

#include "ivote/errors.hpp"

namespace ivote {

json prefset_to_json(const PrefSet& prefs) {
  json races = json::array();
  for (const auto& pv : prefs)
    races.push_back(json{{"race_id", pv.race_id}, {"candidates", pv.candidates}});
  return json{{"prefs", races}};
}

PrefSet prefset_from_json(const json& j) {
  try {
    PrefSet out;
    for (const auto& race : j.at("prefs")) {
      PreferenceVector pv;
      pv.race_id = race.at("race_id").get<std::string>();
      pv.candidates = race.at("candidates").get<std::vector<std::string>>();
      out.push_back(std::move(pv));
    }
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("preferences: ") + e.what());
  }
}

std::string encode_prefs(const PrefSet& prefs) {
  return prefset_to_json(prefs).dump();
}

PrefSet decode_prefs(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError("preference payload not JSON");
  return prefset_from_json(j);
}

json TokenFile::to_json() const {
  json races_j = json::array();
  for (const auto& r : races)
    races_j.push_back(json{{"race_id", r.race_id}, {"candidates", r.candidates}});
  json partials = json::array();
  for (const auto& pv : partial_votes) partials.push_back(pv.to_base64());
  return json{
      {"election_pk", base64_encode(election_public_key)},
      {"races", races_j},
      {"partial_votes", partials},
  };
}

TokenFile TokenFile::from_json(const json& j) {
  try {
    TokenFile t;
    t.election_public_key = base64_decode(j.at("election_pk").get<std::string>());
    for (const auto& r : j.at("races")) {
      t.races.push_back({r.at("race_id").get<std::string>(),
                         r.at("candidates").get<std::vector<std::string>>()});
    }
    for (const auto& pv : j.at("partial_votes"))
      t.partial_votes.push_back(
          crypto::SealedBlob::from_base64(pv.get<std::string>()));
    return t;
  } catch (const json::exception& e) {
    throw MalformedFileError(std::string("token file: ") + e.what());
  }
}

json PartialVote::to_json() const {
  return json{{"eo", eo.to_base64()}, {"signature", base64_encode(signature)}};
}

PartialVote PartialVote::from_json(const json& j) {
  try {
    PartialVote pv;
    pv.eo = crypto::SealedBlob::from_base64(j.at("eo").get<std::string>());
    pv.signature = base64_decode(j.at("signature").get<std::string>());
    return pv;
  } catch (const json::exception& e) {
    throw MalformedFileError(std::string("partial vote: ") + e.what());
  }
}

Bytes Ballot::signed_payload() const {
  Bytes out = wrapped_key;
  Bytes sp = sealed_prefs.serialize();
  out.insert(out.end(), sp.begin(), sp.end());
  return out;
}

json Ballot::to_json() const {
  return json{
      {"wrapped_key", base64_encode(wrapped_key)},
      {"sealed_prefs", sealed_prefs.to_base64()},
      {"signature", base64_encode(signature)},
  };
}

Ballot Ballot::from_json(const json& j) {
  try {
    Ballot b;
    b.wrapped_key = base64_decode(j.at("wrapped_key").get<std::string>());
    b.sealed_prefs =
        crypto::SealedBlob::from_base64(j.at("sealed_prefs").get<std::string>());
    b.signature = base64_decode(j.at("signature").get<std::string>());
    return b;
  } catch (const json::exception& e) {
    throw MalformedFileError(std::string("ballot: ") + e.what());
  }
}

std::string Envelope::to_line() const {
  json j{{"endpoint", endpoint}, {"body", body}};
  if (voter_keys_id) j["voter_keys_id"] = *voter_keys_id;
  if (!cookies.empty()) j["cookies"] = cookies;
  return j.dump();
}

Envelope Envelope::from_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ValidationError("envelope is not a JSON object");
  try {
    Envelope env;
    env.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("voter_keys_id"))
      env.voter_keys_id = j["voter_keys_id"].get<std::string>();
    if (j.contains("cookies")) env.cookies = j["cookies"];
    env.body = j.value("body", json::object());
    return env;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("envelope: ") + e.what());
  }
}

std::string WireResponse::to_line() const {
  json j{{"status", ok ? "ok" : "error"}, {"body", body}};
  if (!ok) j["error"] = error;
  return j.dump();
}

WireResponse WireResponse::from_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw TransportError("response is not a JSON object");
  WireResponse r;
  r.ok = j.value("status", "") == "ok";
  r.error = j.value("error", "");
  r.body = j.value("body", json::object());
  return r;
}

std::string ep_registration_visit() { return "registration/visit"; }
std::string ep_login_page() { return "page/login"; }
std::string ep_login() { return "login"; }

std::string ep_token(const std::string& voter_keys_id) {
  return "vote-encoder/token/" + voter_keys_id + "?v=1";
}

std::string ep_partial_vote(const std::string& voter_keys_id) {
  return "vote-encoder/partial_vote/" + voter_keys_id + "?v=1";
}

std::string ep_cast(const std::string& voter_keys_id) {
  return "vote-encoder/vote/" + voter_keys_id + "?v=1";
}

bool is_token_endpoint(std::string_view ep) {
  return ep.rfind("vote-encoder/token/", 0) == 0;
}

bool is_partial_endpoint(std::string_view ep) {
  return ep.rfind("vote-encoder/partial_vote/", 0) == 0;
}

bool is_cast_endpoint(std::string_view ep) {
  return ep.rfind("vote-encoder/vote/", 0) == 0;
}

}  // namespace ivote
