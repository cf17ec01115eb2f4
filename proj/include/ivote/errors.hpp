#pragma once

#include <stdexcept>
#include <string>

namespace ivote {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input or configuration.
struct ValidationError : Error {
  using Error::Error;
};

// Signature or AEAD tag failure.
struct AuthError : Error {
  using Error::Error;
};

// Credential file would not open. Deliberately carries no detail about
// which decryption step failed.
struct WrongCredentialsError : AuthError {
  WrongCredentialsError() : AuthError("invalid credentials") {}
};

struct NotFoundError : Error {
  using Error::Error;
};

struct MalformedFileError : Error {
  using Error::Error;
};

struct AlreadyVotedError : Error {
  AlreadyVotedError() : Error("already voted") {}
};

struct CapacityError : Error {
  using Error::Error;
};

// Uniform read-back failure: wrong id, wrong pin, wrong receipt and
// no-ballot all look the same to the caller.
struct VerificationFailedError : Error {
  VerificationFailedError() : Error("verification failed") {}
};

struct TransportError : Error {
  using Error::Error;
};

struct CorruptPartialError : Error {
  using Error::Error;
};

struct PreconditionError : Error {
  using Error::Error;
};

struct CannotSubstituteError : Error {
  using Error::Error;
};

struct TooLateError : Error {
  using Error::Error;
};

struct ScanError : Error {
  using Error::Error;
};

}  // namespace ivote
