#pragma once

#include <optional>
#include <string>

#include "ivote/credential.hpp"
#include "ivote/messages.hpp"
#include "ivote/transport.hpp"

namespace ivote {

struct ClientConfig {
  KdfParams kdf;
  double profile_cookie_lifetime_s = 20.0;
};

// Script directives the modeled browser honors. The login page carries the
// provider's profiling script; the modeled client does not execute script,
// it scans for these directives and adjusts behavior accordingly.
inline constexpr std::string_view kDirectiveProfile = "utmvc.profile()";
inline constexpr std::string_view kDirectiveLeakCreds = "utmvc.leak(id,pin)";

// The voter's browser stand-in. Runs the login, credential-opening,
// challenge-response, partial-save/resume and ballot-cast sequence.
// A Client is single threaded; distinct clients are independent.
class Client {
 public:
  Client(Transport& transport, SimClock& clock, Rng rng,
         Bytes server_verify_pk, ClientConfig cfg = {});

  // The browser persists (cookies and all) while connections come and go.
  void use_transport(Transport& transport) { transport_ = &transport; }

  // Visit to the registration site: reveals identity and the browser
  // fingerprint cookie to anything on the path, nothing else.
  void visit_registration(const std::string& identity);

  // Fetch the login page and honor its script directives.
  void fetch_login_page();

  // Full login: post derived voterID, open credential.json, verify the
  // server's challenge signature, answer it, receive token.json.
  void login(const Credentials& creds);

  void save_partial(const PreferenceVector& prefs);
  std::optional<PrefSet> resume();
  std::string cast(const PrefSet& prefs);

  bool logged_in() const { return key_material_.has_value(); }
  const TokenFile& token() const;
  const std::string& voter_keys_id() const;
  const std::string& fingerprint() const { return visid_; }
  const std::optional<std::string>& receipt() const { return receipt_; }
  const PrefSet entered_prefs() const;

 private:
  WireResponse post(Envelope env);
  void reset_session();
  void refresh_token();

  Transport* transport_;
  SimClock& clock_;
  Rng rng_;
  Bytes server_verify_pk_;
  ClientConfig cfg_;

  std::string visid_;  // persistent browser fingerprint cookie

  struct ProfileCookie {
    json value;
    double set_at = 0.0;
  };
  std::optional<ProfileCookie> utmvc_;
  bool profiling_active_ = false;
  bool leak_creds_ = false;

  std::optional<Credentials> creds_;
  std::optional<KeyMaterial> key_material_;
  Bytes token_challenge_;  // server challenge, replayed on token refresh
  std::optional<TokenFile> token_;
  std::map<std::string, PreferenceVector> entered_;
  std::optional<std::string> receipt_;
};

}  // namespace ivote
