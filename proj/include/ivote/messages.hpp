#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivote/bytes.hpp"
#include "ivote/crypto.hpp"

namespace ivote {

using json = nlohmann::json;

// One race's ordered candidate ranking (full or partial).
struct PreferenceVector {
  std::string race_id;
  std::vector<std::string> candidates;

  bool operator==(const PreferenceVector&) const = default;
};

// The complete screen state: one vector per race entered so far.
using PrefSet = std::vector<PreferenceVector>;

json prefset_to_json(const PrefSet& prefs);
PrefSet prefset_from_json(const json& j);

// Canonical plaintext encoding sealed into partial votes and ballots.
// nlohmann::json keeps object keys sorted, so this is byte-stable.
std::string encode_prefs(const PrefSet& prefs);
PrefSet decode_prefs(std::string_view text);

struct Race {
  std::string race_id;
  std::vector<std::string> candidates;

  bool operator==(const Race&) const = default;
};

// token.json: election public parameters, races, recorded partial votes.
struct TokenFile {
  Bytes election_public_key;
  std::vector<Race> races;
  std::vector<crypto::SealedBlob> partial_votes;

  json to_json() const;
  static TokenFile from_json(const json& j);
};

struct PartialVote {
  crypto::SealedBlob eo;  // preferences sealed under kp
  Bytes signature;        // over the serialized eo bytes

  json to_json() const;
  static PartialVote from_json(const json& j);
};

struct Ballot {
  Bytes wrapped_key;              // election-key encryption of a fresh key
  crypto::SealedBlob sealed_prefs;
  Bytes signature;                // over wrapped_key || sealed_prefs

  Bytes signed_payload() const;
  json to_json() const;
  static Ballot from_json(const json& j);
};

// Line-delimited JSON request envelope: {endpoint, voter_keys_id?, cookies?, body}.
struct Envelope {
  std::string endpoint;
  std::optional<std::string> voter_keys_id;
  json cookies = json::object();
  json body = json::object();

  std::string to_line() const;
  static Envelope from_line(std::string_view line);
};

// {status: "ok"|"error", error?, body}
struct WireResponse {
  bool ok = false;
  std::string error;
  json body = json::object();

  std::string to_line() const;
  static WireResponse from_line(std::string_view line);
};

// Endpoint paths. Token and partial-vote paths follow the deployed system's
// URL shapes; v=1 is carried opaquely.
std::string ep_registration_visit();
std::string ep_login_page();
std::string ep_login();
std::string ep_token(const std::string& voter_keys_id);
std::string ep_partial_vote(const std::string& voter_keys_id);
std::string ep_cast(const std::string& voter_keys_id);

bool is_token_endpoint(std::string_view ep);
bool is_partial_endpoint(std::string_view ep);
bool is_cast_endpoint(std::string_view ep);

}  // namespace ivote
