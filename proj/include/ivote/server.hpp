#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ivote/credential.hpp"
#include "ivote/messages.hpp"

namespace ivote {

inline constexpr std::string_view kLoginScriptOpen =
    "<script id='incap-resource'>";
inline constexpr std::string_view kLoginScriptClose = "</script>";

// The provider's profiling script embedded in the login page.
std::string extract_login_script(const std::string& html);

struct ElectionConfig {
  KdfParams kdf;
  std::vector<Race> races = {
      {"assembly", {"anders", "bishop", "castro", "duong", "ellis"}},
      {"council", {"fields", "gupta", "hale", "ionescu", "jimenez"}},
  };
};

// Per-voter server state. Holds only the login hash and sealed material:
// the PIN, iVoteID, kp and signing key are never stored in recoverable
// form (ivote_id is kept as a SHA-256 for uniqueness checks).
struct VoterRecord {
  std::string ivote_id_hash;
  std::string login_id;
  CredentialFile credential_file;
  std::string voter_keys_id;
  Bytes verify_pk;
  std::vector<crypto::SealedBlob> partial_votes;
  std::optional<Ballot> final_ballot;
  std::optional<std::string> receipt;
};

// The iVote-server stand-in: registration, credential lookup, token
// issuance, partial-vote storage, ballot acceptance and telephone
// read-back. All operations are serialized behind one mutex.
class Server {
 public:
  Server(ElectionConfig cfg, std::uint64_t seed);

  // Registration. Returns the fresh iVoteID, which in the real system
  // travels to the voter by post or SMS, never over this channel.
  std::string register_voter(const std::string& identity,
                             const std::string& pin);

  // Fresh encrypted credential container for the given credentials. Pure
  // generation; register_voter is the caller that persists the result.
  CredentialFile make_credential_file(const Credentials& creds);

  CredentialFile lookup_credential(const std::string& login_id);
  TokenFile issue_token(const std::string& voter_keys_id, ByteView response,
                        ByteView signature);
  void store_partial_vote(const std::string& voter_keys_id,
                          const PartialVote& pv);
  std::string cast_ballot(const std::string& voter_keys_id,
                          const Ballot& ballot);
  PrefSet verify_readback(const std::string& ivote_id, const std::string& pin,
                          const std::string& receipt);

  // Wire dispatch for the line-delimited JSON transport.
  std::string handle_line(const std::string& line);

  Bytes challenge_verify_key() const;   // distributed to clients out of band
  Bytes election_public_key() const;
  const std::vector<Race>& races() const { return cfg_.races; }
  const ElectionConfig& config() const { return cfg_; }

  std::string login_page_html() const;

  // Full state as a single JSON snapshot.
  json state_snapshot() const;

  std::size_t voter_count() const;

 private:
  struct GeneratedCredential {
    CredentialFile file;
    std::string login_id;
    std::string voter_keys_id;
    Bytes verify_pk;
  };
  GeneratedCredential generate_credential(const Credentials& creds);
  VoterRecord& by_vkid(const std::string& voter_keys_id);
  json dispatch(const Envelope& env);

  ElectionConfig cfg_;
  mutable std::mutex mu_;
  Rng rng_;
  crypto::SigningKey challenge_key_;   // signs server challenges
  crypto::KemKeyPair election_keys_;
  std::unordered_map<std::string, VoterRecord> voters_;  // by login_id
  std::unordered_map<std::string, std::string> vkid_index_;
  std::unordered_set<std::string> used_id_hashes_;
  std::unordered_set<std::string> used_receipts_;
  std::string login_page_;
};

}  // namespace ivote
