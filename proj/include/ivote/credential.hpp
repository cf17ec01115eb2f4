#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "ivote/bytes.hpp"
#include "ivote/crypto.hpp"

namespace ivote {

using json = nlohmann::json;

// The (iVoteID, PIN) pair every client-side secret is derived from.
struct Credentials {
  std::string ivote_id;  // decimal string, leading zeros significant
  std::string pin;       // decimal string

  bool operator==(const Credentials&) const = default;
};

// Tunable derivation parameters. Defaults match the deployed system; tests
// scale iterations down.
struct KdfParams {
  int iterations = 8000;
  int id_digits = 8;
  int pin_digits = 6;
};

void validate_credentials(const Credentials& creds, const KdfParams& params);

// iVoteID + "," + Base64(SHA256(PIN)) + "," + suffix
std::string kdf_password_string(const Credentials& creds,
                                std::string_view suffix);

// PBKDF2-HmacSHA1 over the "voterid" password string, salt of 20 null
// bytes, 16-byte output, lowercase hex. This is the value posted at login
// and the brute-force target.
std::string derive_login_id(const Credentials& creds,
                            const KdfParams& params = {});

// Same construction with suffix "passKS" and the 16-byte salt from vkp.
Key16 derive_keystore_password_key(const Credentials& creds, ByteView salt,
                                   const KdfParams& params = {});

inline constexpr std::string_view kVoterAuthPrefix = "VoterAuth_";

struct VadObject {
  std::string common_name;  // "VoterAuth_" + voterKeysId
  Bytes public_key;         // voter certificate public key (Ed25519, 32 bytes)

  bool operator==(const VadObject&) const = default;
};

struct VkObject {
  Bytes salt;  // 16 bytes, long-password salt
  crypto::SealedBlob store;                          // sealed signing key
  std::map<std::string, crypto::SealedBlob> secrets; // contains "kp"

  bool operator==(const VkObject&) const = default;
};

struct VkpObject {
  crypto::SealedBlob password;  // sealed derived password
  Bytes salt;                   // 16 bytes, keystore-key salt

  bool operator==(const VkpObject&) const = default;
};

// Server-stored encrypted container delivered at login (credential.json).
struct CredentialFile {
  VadObject vad;
  VkObject vk;
  VkpObject vkp;
  Bytes challenge_object;  // challenge(16) || server signature(64), opaque

  nlohmann::json to_json() const;
  static CredentialFile from_json(const nlohmann::json& j);

  bool operator==(const CredentialFile&) const = default;
};

// Everything the client recovers from a credential file.
struct KeyMaterial {
  Key16 kp;                // partial-vote key
  crypto::SigningKey sk;   // ballot signing key
  std::string voter_keys_id;
};

// Full decryption chain: keystore key from vkp.salt, derived password from
// vkp, single-iteration long password over vk.salt, then kp and the signing
// key under the long password. Any tag failure surfaces as the same
// WrongCredentialsError regardless of step.
KeyMaterial open_credential_file(const Credentials& creds,
                                 const CredentialFile& cf,
                                 const KdfParams& params = {});

}  // namespace ivote
