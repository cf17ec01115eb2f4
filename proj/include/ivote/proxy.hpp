#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ivote/bruteforce.hpp"
#include "ivote/credential.hpp"
#include "ivote/messages.hpp"
#include "ivote/transport.hpp"

namespace ivote {

// Length-preserving rewrite of the profiling script on the login page.
struct InjectionPayload {
  std::string original_script;
  std::string modified_script;

  // Compacts the original's comment padding to make room for the
  // credential-leak directive; result has exactly the original's length.
  static InjectionPayload credential_leak(const std::string& original_script);
};

struct AttackConfig {
  bool passive_log = true;
  bool inject = false;
  bool substitute = false;  // requires passive_log
  PrefSet attacker_prefs;
  std::optional<InjectionPayload> payload;
  double cookie_lifetime_s = 20.0;
  KdfParams kdf;
  bruteforce::CrackOptions crack;
};

struct TranscriptEntry {
  enum class Dir { c2s, s2c };
  Dir direction = Dir::c2s;
  std::string endpoint;
  std::string body;  // exact line bytes as relayed
  double timestamp = 0.0;
  bool rewritten = false;
};

// Ordered record of one session's relayed messages. Append-only; bodies are
// byte-exact unless an attack mode rewrote them.
struct Transcript {
  std::uint64_t session_id = 0;
  std::string client_fingerprint;
  std::vector<TranscriptEntry> entries;

  json to_json() const;
};

// The interception point the DDoS-mitigation provider occupies: relays and
// records every message, and in attack modes injects, harvests, cracks,
// substitutes and links. TLS is not modeled on this path; the proxy sits
// where the plaintext exists.
class Proxy {
 public:
  Proxy(Transport& upstream, AttackConfig cfg, SimClock& clock, Rng rng);

  // New relayed channel; each client session gets its own.
  struct SessionHandle {
    std::uint64_t id = 0;
    std::unique_ptr<Transport> transport;
  };
  SessionHandle open_session();

  // Relay core, shared by the in-process channel and the socket front end.
  std::uint64_t new_session();
  std::string relay_c2s(std::uint64_t session_id, const std::string& line);
  std::string relay_s2c(std::uint64_t session_id,
                        const std::string& request_endpoint,
                        const std::string& line);

  // Replaces the payload's original script inside the page; throws
  // ValidationError when the payload is not length-preserving or the
  // original is absent.
  static std::string inject(const std::string& page_html,
                            const InjectionPayload& payload);

  // Credentials leaked through the profiling cookie, attributed to this
  // transcript's fingerprint. Cookies observed outside their lifetime
  // window are ignored.
  std::vector<Credentials> harvest_credentials(const Transcript& t) const;

  // fingerprint -> leaked credentials across all sessions.
  std::map<std::string, Credentials> harvest_all() const;

  // Brute-forces the login hash observed in the transcript. With a known-ID
  // hint the search covers PINs only; otherwise the full id x pin space.
  // Records the recovered credentials against the session.
  Credentials crack_session(const Transcript& t,
                            std::optional<std::string> known_id_hint = {});

  // Arms ballot substitution for a session whose credentials have been
  // recovered. The swap happens when the voter's cast message crosses the
  // proxy; the receipt the voter saw is then available via
  // observed_receipt().
  void substitute_ballot(std::uint64_t session_id,
                         const PrefSet& attacker_prefs);
  std::optional<std::string> observed_receipt(std::uint64_t session_id) const;

  struct DecryptedPartial {
    bool ok = false;
    PrefSet prefs;
  };
  // Opens the credential file recorded in the transcript and unseals every
  // recorded partial vote. Tag failures are flagged; the rest are returned.
  std::vector<DecryptedPartial> decrypt_partials(const Transcript& t,
                                                 const Credentials& creds) const;

  // Joins registration identities with voting sessions on the client
  // fingerprint cookie. Unlinkable sessions are omitted.
  static std::map<std::string, std::uint64_t> link_sessions(
      const std::vector<Transcript>& transcripts);
  std::map<std::string, std::uint64_t> link_sessions() const;

  void set_recovered(std::uint64_t session_id, const Credentials& creds);
  std::optional<Credentials> recovered(std::uint64_t session_id) const;

  Transcript transcript(std::uint64_t session_id) const;
  std::vector<Transcript> transcripts() const;
  std::string export_jsonl() const;

  const AttackConfig& config() const { return cfg_; }

 private:
  struct SessionState {
    Transcript transcript;
    std::optional<json> credential_file;  // recorded login response
    std::optional<Bytes> election_pk;     // recorded token response
    bool cast_seen = false;
    std::optional<Credentials> recovered;
    std::optional<PrefSet> armed_prefs;
    std::optional<std::string> observed_receipt;
  };

  SessionState& state(std::uint64_t session_id);
  const SessionState& state(std::uint64_t session_id) const;
  std::string rewrite_cast(SessionState& s, const Envelope& env);

  Transport& upstream_;
  AttackConfig cfg_;
  SimClock& clock_;
  Rng rng_;
  mutable std::mutex mu_;
  std::uint64_t next_session_ = 1;
  std::map<std::uint64_t, SessionState> sessions_;
};

}  // namespace ivote
