#include "ivote/certscan.hpp"

#include <omp.h>
#include <openssl/err.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <map>
#include <memory>

#include "ivote/crypto.hpp"
#include "ivote/errors.hpp"
#include "ivote/net.hpp"

namespace ivote::certscan {

namespace {

struct SslCtxFree {
  void operator()(SSL_CTX* p) const { SSL_CTX_free(p); }
};
struct SslFree {
  void operator()(SSL* p) const { SSL_free(p); }
};
struct X509Free {
  void operator()(X509* p) const { X509_free(p); }
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string_view> split_labels(std::string_view name) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= name.size()) {
    auto dot = name.find('.', start);
    if (dot == std::string_view::npos) {
      out.push_back(name.substr(start));
      break;
    }
    out.push_back(name.substr(start, dot - start));
    start = dot + 1;
  }
  return out;
}

std::unique_ptr<X509, X509Free> parse_der(ByteView der) {
  const unsigned char* p = der.data();
  std::unique_ptr<X509, X509Free> cert(
      d2i_X509(nullptr, &p, static_cast<long>(der.size())));
  if (!cert) throw ValidationError("certificate DER does not parse");
  return cert;
}

std::string subject_of(X509* cert) {
  char buf[512] = {0};
  X509_NAME_oneline(X509_get_subject_name(cert), buf, sizeof(buf) - 1);
  return buf;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& spec) {
  Endpoint ep;
  auto colon = spec.rfind(':');
  if (colon == std::string::npos) {
    ep.host = spec;
  } else {
    ep.host = spec.substr(0, colon);
    const std::string port_s = spec.substr(colon + 1);
    int port = 0;
    try {
      port = std::stoi(port_s);
    } catch (const std::exception&) {
      throw ValidationError("bad endpoint port: " + spec);
    }
    if (port < 1 || port > 65535)
      throw ValidationError("port out of range: " + spec);
    ep.port = static_cast<std::uint16_t>(port);
  }
  if (ep.host.empty()) throw ValidationError("empty endpoint host");
  return ep;
}

std::string Endpoint::display() const {
  return host + ":" + std::to_string(port);
}

CertRecord grab_cert(const Endpoint& ep, double timeout_s) {
  int fd = -1;
  try {
    fd = net::tcp_connect(ep.host, ep.port, timeout_s);
  } catch (const TransportError& e) {
    throw ScanError(std::string("connection refused: ") + e.what());
  }

  std::unique_ptr<SSL_CTX, SslCtxFree> ctx(SSL_CTX_new(TLS_client_method()));
  if (!ctx) {
    net::close_fd(fd);
    throw ScanError("ssl context allocation failed");
  }
  // Capture only; chain validation is out of scope.
  SSL_CTX_set_verify(ctx.get(), SSL_VERIFY_NONE, nullptr);

  std::unique_ptr<SSL, SslFree> ssl(SSL_new(ctx.get()));
  if (!ssl) {
    net::close_fd(fd);
    throw ScanError("ssl allocation failed");
  }
  SSL_set_fd(ssl.get(), fd);
  const std::string sni = ep.sni.value_or(ep.host);
  // SNI only makes sense for names, not addresses.
  if (!sni.empty() && sni.find_first_not_of("0123456789.") != std::string::npos)
    SSL_set_tlsext_host_name(ssl.get(), sni.c_str());

  const auto t0 = std::chrono::steady_clock::now();
  if (SSL_connect(ssl.get()) != 1) {
    net::close_fd(fd);
    throw ScanError("no TLS handshake");
  }
  const auto t1 = std::chrono::steady_clock::now();

  std::unique_ptr<X509, X509Free> leaf(SSL_get1_peer_certificate(ssl.get()));
  SSL_shutdown(ssl.get());
  net::close_fd(fd);
  if (!leaf) throw ScanError("peer presented no certificate");

  unsigned char* der = nullptr;
  const int der_len = i2d_X509(leaf.get(), &der);
  if (der_len <= 0) throw ScanError("certificate does not re-encode");
  Bytes der_bytes(der, der + der_len);
  OPENSSL_free(der);

  CertRecord rec;
  rec.endpoint = ep;
  rec.der = std::move(der_bytes);
  rec.fingerprint = hex_encode(crypto::sha256(rec.der));
  rec.subject = subject_of(leaf.get());
  rec.san_dns = extract_sans(rec.der, rec.san_other_count);
  rec.handshake_rtt_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rec;
}

GrabResult try_grab(const Endpoint& ep, double timeout_s) {
  GrabResult out;
  try {
    out.cert = grab_cert(ep, timeout_s);
  } catch (const Error& e) {
    out.failure_reason = e.what();
  }
  return out;
}

std::vector<std::string> extract_sans(ByteView der) {
  int ignored = 0;
  return extract_sans(der, ignored);
}

std::vector<std::string> extract_sans(ByteView der, int& other_count) {
  auto cert = parse_der(der);
  other_count = 0;
  std::vector<std::string> out;
  GENERAL_NAMES* names = static_cast<GENERAL_NAMES*>(
      X509_get_ext_d2i(cert.get(), NID_subject_alt_name, nullptr, nullptr));
  if (!names) return out;
  for (int i = 0; i < sk_GENERAL_NAME_num(names); ++i) {
    const GENERAL_NAME* name = sk_GENERAL_NAME_value(names, i);
    if (name->type != GEN_DNS) {
      ++other_count;
      continue;
    }
    const unsigned char* data = ASN1_STRING_get0_data(name->d.dNSName);
    const int len = ASN1_STRING_length(name->d.dNSName);
    if (data && len > 0)
      out.emplace_back(reinterpret_cast<const char*>(data),
                       static_cast<std::size_t>(len));
  }
  GENERAL_NAMES_free(names);
  return out;
}

bool covers(std::string_view san_entry, std::string_view target_fqdn) {
  const std::string entry = lower(san_entry);
  const std::string target = lower(target_fqdn);
  if (entry.empty() || target.empty()) return false;
  if (entry == target) return true;

  const auto entry_labels = split_labels(entry);
  const auto target_labels = split_labels(target);
  // A wildcard stands for exactly one label, so label counts must agree.
  if (entry_labels.size() != target_labels.size()) return false;
  if (entry_labels[0] != "*") return false;
  for (std::size_t i = 1; i < entry_labels.size(); ++i) {
    if (entry_labels[i] != target_labels[i]) return false;
  }
  return !target_labels[0].empty();
}

nlohmann::json FootprintReport::to_json() const {
  nlohmann::json clusters_j = nlohmann::json::array();
  for (const auto& c : clusters) {
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& ep : c.endpoints) eps.push_back(ep.display());
    clusters_j.push_back({
        {"fingerprint", c.fingerprint},
        {"subject", c.subject},
        {"endpoints", eps},
        {"san_dns", c.san_dns},
        {"san_count", c.san_dns.size()},
    });
  }
  nlohmann::json failures_j = nlohmann::json::array();
  for (const auto& f : failures)
    failures_j.push_back(
        {{"endpoint", f.endpoint.display()}, {"reason", f.reason}});
  nlohmann::json covering = nlohmann::json::array();
  for (const auto& ep : covering_endpoints) covering.push_back(ep.display());
  return nlohmann::json{
      {"target", target},
      {"clusters", clusters_j},
      {"failures", failures_j},
      {"covering_endpoints", covering},
      {"target_covered", target_covered()},
      {"cohabitants", cohabitants},
  };
}

FootprintReport footprint_report(const std::vector<Endpoint>& endpoints,
                                 const std::string& target_fqdn,
                                 int parallelism, double timeout_s) {
  if (endpoints.empty()) throw ValidationError("no endpoints to scan");
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");

  std::vector<GrabResult> results(endpoints.size());
#pragma omp parallel for schedule(dynamic) num_threads(parallelism)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(endpoints.size());
       ++i) {
    results[static_cast<std::size_t>(i)] =
        try_grab(endpoints[static_cast<std::size_t>(i)], timeout_s);
  }

  FootprintReport report;
  report.target = target_fqdn;
  std::map<std::string, std::size_t> cluster_index;
  std::vector<std::string> cohabitants;
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    const GrabResult& r = results[i];
    if (!r.cert) {
      report.failures.push_back({endpoints[i], r.failure_reason});
      continue;
    }
    auto [it, fresh] =
        cluster_index.try_emplace(r.cert->fingerprint, report.clusters.size());
    if (fresh) {
      Cluster c;
      c.fingerprint = r.cert->fingerprint;
      c.subject = r.cert->subject;
      c.san_dns = r.cert->san_dns;
      report.clusters.push_back(std::move(c));
    }
    report.clusters[it->second].endpoints.push_back(endpoints[i]);

    const bool covered =
        std::any_of(r.cert->san_dns.begin(), r.cert->san_dns.end(),
                    [&](const std::string& san) { return covers(san, target_fqdn); });
    if (covered) {
      report.covering_endpoints.push_back(endpoints[i]);
      for (const auto& san : r.cert->san_dns) {
        if (!covers(san, target_fqdn) &&
            std::find(cohabitants.begin(), cohabitants.end(), san) ==
                cohabitants.end())
          cohabitants.push_back(san);
      }
    }
  }
  report.cohabitants = std::move(cohabitants);
  return report;
}

std::vector<Endpoint> load_endpoints_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open endpoints file: " + path);
  std::vector<Endpoint> out;
  std::string line;
  while (std::getline(in, line)) {
    // Trim and skip blanks/comments.
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string spec = line.substr(first, last - first + 1);
    if (spec.empty() || spec[0] == '#') continue;
    out.push_back(Endpoint::parse(spec));
  }
  return out;
}

}  // namespace ivote::certscan
