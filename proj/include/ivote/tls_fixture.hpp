#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "ivote/bytes.hpp"

namespace ivote::certscan {

// Self-signed leaf with the given SAN list (EC P-256). Used by tests and by
// the fixture server below to stand in for scanned infrastructure.
struct FixtureCert {
  Bytes cert_der;
  std::string cert_pem;
  std::string key_pem;
};

FixtureCert make_self_signed_cert(const std::string& common_name,
                                  const std::vector<std::string>& san_dns);

// Accepts TLS connections on 127.0.0.1, completes the handshake with the
// fixture certificate and closes. Multiple servers may share one cert.
class TlsFixtureServer {
 public:
  explicit TlsFixtureServer(const FixtureCert& cert);
  ~TlsFixtureServer();

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void accept_loop();

  struct CtxHolder;
  std::unique_ptr<CtxHolder> ctx_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
};

}  // namespace ivote::certscan
