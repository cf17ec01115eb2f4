#include "ivote/credential.hpp"

#include <algorithm>
#include <cstring>

#include "ivote/errors.hpp"

namespace ivote {

namespace {

bool all_decimal(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

Key16 to_key16(ByteView b) {
  if (b.size() != 16) throw ValidationError("expected 16 bytes");
  Key16 k;
  std::memcpy(k.data(), b.data(), k.size());
  return k;
}

json blob_to_json(const crypto::SealedBlob& blob) { return blob.to_base64(); }

crypto::SealedBlob blob_from_json(const json& j) {
  return crypto::SealedBlob::from_base64(j.get<std::string>());
}

}  // namespace

void validate_credentials(const Credentials& creds, const KdfParams& params) {
  if (!all_decimal(creds.ivote_id) ||
      creds.ivote_id.size() != static_cast<std::size_t>(params.id_digits))
    throw ValidationError("ivote_id must be " +
                          std::to_string(params.id_digits) +
                          " decimal digits");
  if (!all_decimal(creds.pin) ||
      creds.pin.size() != static_cast<std::size_t>(params.pin_digits))
    throw ValidationError("pin must be " + std::to_string(params.pin_digits) +
                          " decimal digits");
}

std::string kdf_password_string(const Credentials& creds,
                                std::string_view suffix) {
  Bytes pin_hash = crypto::sha256(to_bytes(creds.pin));
  std::string out = creds.ivote_id;
  out += ',';
  out += base64_encode(pin_hash);
  out += ',';
  out += suffix;
  return out;
}

std::string derive_login_id(const Credentials& creds, const KdfParams& params) {
  validate_credentials(creds, params);
  const std::string password = kdf_password_string(creds, "voterid");
  const Bytes salt(20, 0x00);
  Bytes key = crypto::pbkdf2_hmac_sha1(to_bytes(password), salt,
                                       params.iterations, crypto::kKeyLen);
  return hex_encode(key);
}

Key16 derive_keystore_password_key(const Credentials& creds, ByteView salt,
                                   const KdfParams& params) {
  validate_credentials(creds, params);
  if (salt.size() != 16) throw ValidationError("vkp salt must be 16 bytes");
  const std::string password = kdf_password_string(creds, "passKS");
  return to_key16(crypto::pbkdf2_hmac_sha1(to_bytes(password), salt,
                                           params.iterations,
                                           crypto::kKeyLen));
}

json CredentialFile::to_json() const {
  json secrets = json::object();
  for (const auto& [name, blob] : vk.secrets) secrets[name] = blob_to_json(blob);
  return json{
      {"vad",
       {{"common_name", vad.common_name},
        {"public_key", base64_encode(vad.public_key)}}},
      {"vk",
       {{"salt", base64_encode(vk.salt)},
        {"store", blob_to_json(vk.store)},
        {"secrets", secrets}}},
      {"vkp",
       {{"password", blob_to_json(vkp.password)},
        {"salt", base64_encode(vkp.salt)}}},
      {"challenge_object", base64_encode(challenge_object)},
  };
}

CredentialFile CredentialFile::from_json(const json& j) {
  try {
    CredentialFile cf;
    cf.vad.common_name = j.at("vad").at("common_name").get<std::string>();
    cf.vad.public_key =
        base64_decode(j.at("vad").at("public_key").get<std::string>());
    cf.vk.salt = base64_decode(j.at("vk").at("salt").get<std::string>());
    cf.vk.store = blob_from_json(j.at("vk").at("store"));
    for (const auto& [name, value] : j.at("vk").at("secrets").items())
      cf.vk.secrets.emplace(name, blob_from_json(value));
    cf.vkp.password = blob_from_json(j.at("vkp").at("password"));
    cf.vkp.salt = base64_decode(j.at("vkp").at("salt").get<std::string>());
    cf.challenge_object =
        base64_decode(j.at("challenge_object").get<std::string>());
    return cf;
  } catch (const json::exception& e) {
    throw MalformedFileError(std::string("credential file: ") + e.what());
  }
}

KeyMaterial open_credential_file(const Credentials& creds,
                                 const CredentialFile& cf,
                                 const KdfParams& params) {
  validate_credentials(creds, params);
  if (cf.vad.common_name.rfind(kVoterAuthPrefix, 0) != 0)
    throw MalformedFileError("vad common name lacks VoterAuth_ prefix");
  const std::string voter_keys_id =
      cf.vad.common_name.substr(kVoterAuthPrefix.size());
  auto kp_it = cf.vk.secrets.find("kp");
  if (kp_it == cf.vk.secrets.end())
    throw MalformedFileError("secrets object lacks kp entry");

  try {
    const Key16 keystore_key =
        derive_keystore_password_key(creds, cf.vkp.salt, params);
    const Bytes derived_password = crypto::unseal(keystore_key, cf.vkp.password);
    // Single iteration over the derived password, salted from vk.
    const Key16 long_password = to_key16(crypto::pbkdf2_hmac_sha1(
        derived_password, cf.vk.salt, 1, crypto::kKeyLen));

    KeyMaterial km;
    km.kp = to_key16(crypto::unseal(long_password, kp_it->second));
    const Bytes sk_seed = crypto::unseal(long_password, cf.vk.store);
    km.sk = crypto::SigningKey::from_seed(sk_seed);
    km.voter_keys_id = voter_keys_id;
    if (km.sk.public_key() != cf.vad.public_key)
      throw MalformedFileError("signing key does not match vad certificate");
    return km;
  } catch (const MalformedFileError&) {
    throw;
  } catch (const AuthError&) {
    throw WrongCredentialsError();
  } catch (const ValidationError&) {
    // Wrong-length intermediates behave like any other decryption failure.
    throw WrongCredentialsError();
  }
}

}  // namespace ivote
