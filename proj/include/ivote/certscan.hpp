#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivote/bytes.hpp"

namespace ivote::certscan {

struct Endpoint {
  std::string host;
  std::uint16_t port = 443;
  std::optional<std::string> sni;

  static Endpoint parse(const std::string& spec);  // host[:port]
  std::string display() const;

  bool operator==(const Endpoint&) const = default;
};

struct CertRecord {
  Endpoint endpoint;
  Bytes der;
  std::string fingerprint;  // SHA-256 of DER, lowercase hex
  std::string subject;
  std::vector<std::string> san_dns;  // order-preserving dNSName entries
  int san_other_count = 0;           // non-DNS SAN entries, ignored but counted
  double handshake_rtt_ms = 0.0;
};

struct ScanFailure {
  Endpoint endpoint;
  std::string reason;
};

// Real TLS handshake, certificate capture only; no application data.
// Throws ScanError with the failure reason.
CertRecord grab_cert(const Endpoint& ep, double timeout_s = 5.0);

struct GrabResult {
  std::optional<CertRecord> cert;
  std::string failure_reason;
};
GrabResult try_grab(const Endpoint& ep, double timeout_s = 5.0);

// dNSName entries of the SAN extension, in certificate order. Throws
// ValidationError on unparseable DER.
std::vector<std::string> extract_sans(ByteView der);
std::vector<std::string> extract_sans(ByteView der, int& other_count);

// Certificate name matching: case-insensitive, wildcard only as the entire
// leftmost label, matching exactly one label.
bool covers(std::string_view san_entry, std::string_view target_fqdn);

struct Cluster {
  std::string fingerprint;
  std::string subject;
  std::vector<Endpoint> endpoints;
  std::vector<std::string> san_dns;
};

// Scanned endpoints grouped by served certificate, plus wildcard-coverage
// analysis for one target name. Clusters and failures exactly partition the
// input.
struct FootprintReport {
  std::string target;
  std::vector<Cluster> clusters;
  std::vector<ScanFailure> failures;
  std::vector<Endpoint> covering_endpoints;
  std::vector<std::string> cohabitants;  // SAN entries sharing covering certs

  bool target_covered() const { return !covering_endpoints.empty(); }
  nlohmann::json to_json() const;
};

FootprintReport footprint_report(const std::vector<Endpoint>& endpoints,
                                 const std::string& target_fqdn,
                                 int parallelism = 8, double timeout_s = 5.0);

std::vector<Endpoint> load_endpoints_file(const std::string& path);

}  // namespace ivote::certscan
