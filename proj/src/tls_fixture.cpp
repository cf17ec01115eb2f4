#include "ivote/tls_fixture.hpp"

#include <openssl/bio.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>
#include <sys/socket.h>
#include <unistd.h>

#include <memory>

#include "ivote/errors.hpp"
#include "ivote/net.hpp"

namespace ivote::certscan {

namespace {

struct PkeyFree {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct X509Free {
  void operator()(X509* p) const { X509_free(p); }
};
struct BioFree {
  void operator()(BIO* p) const { BIO_free(p); }
};

std::unique_ptr<EVP_PKEY, PkeyFree> make_p256_key() {
  std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)> ctx(
      EVP_PKEY_CTX_new_id(EVP_PKEY_EC, nullptr), EVP_PKEY_CTX_free);
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_ec_paramgen_curve_nid(ctx.get(), NID_X9_62_prime256v1) !=
          1)
    throw Error("ec keygen init failed");
  EVP_PKEY* raw = nullptr;
  if (EVP_PKEY_keygen(ctx.get(), &raw) != 1) throw Error("ec keygen failed");
  return std::unique_ptr<EVP_PKEY, PkeyFree>(raw);
}

std::string bio_to_string(BIO* bio) {
  char* data = nullptr;
  const long len = BIO_get_mem_data(bio, &data);
  return std::string(data, static_cast<std::size_t>(len));
}

}  // namespace

FixtureCert make_self_signed_cert(const std::string& common_name,
                                  const std::vector<std::string>& san_dns) {
  auto key = make_p256_key();
  std::unique_ptr<X509, X509Free> cert(X509_new());
  if (!cert) throw Error("x509 alloc failed");

  X509_set_version(cert.get(), 2);
  ASN1_INTEGER_set(X509_get_serialNumber(cert.get()),
                   static_cast<long>(::getpid()) ^ 0x5eed);
  X509_gmtime_adj(X509_getm_notBefore(cert.get()), -3600);
  X509_gmtime_adj(X509_getm_notAfter(cert.get()), 365L * 24 * 3600);
  X509_set_pubkey(cert.get(), key.get());

  X509_NAME* name = X509_get_subject_name(cert.get());
  X509_NAME_add_entry_by_txt(
      name, "CN", MBSTRING_ASC,
      reinterpret_cast<const unsigned char*>(common_name.c_str()), -1, -1, 0);
  X509_set_issuer_name(cert.get(), name);

  if (!san_dns.empty()) {
    std::string san_value;
    for (const auto& entry : san_dns) {
      if (!san_value.empty()) san_value += ",";
      san_value += "DNS:" + entry;
    }
    X509_EXTENSION* ext = X509V3_EXT_conf_nid(
        nullptr, nullptr, NID_subject_alt_name, san_value.c_str());
    if (!ext) throw Error("SAN extension construction failed");
    X509_add_ext(cert.get(), ext, -1);
    X509_EXTENSION_free(ext);
  }

  if (X509_sign(cert.get(), key.get(), EVP_sha256()) == 0)
    throw Error("certificate signing failed");

  FixtureCert out;
  unsigned char* der = nullptr;
  const int der_len = i2d_X509(cert.get(), &der);
  if (der_len <= 0) throw Error("certificate encoding failed");
  out.cert_der.assign(der, der + der_len);
  OPENSSL_free(der);

  std::unique_ptr<BIO, BioFree> cert_bio(BIO_new(BIO_s_mem()));
  PEM_write_bio_X509(cert_bio.get(), cert.get());
  out.cert_pem = bio_to_string(cert_bio.get());

  std::unique_ptr<BIO, BioFree> key_bio(BIO_new(BIO_s_mem()));
  PEM_write_bio_PrivateKey(key_bio.get(), key.get(), nullptr, nullptr, 0,
                           nullptr, nullptr);
  out.key_pem = bio_to_string(key_bio.get());
  return out;
}

struct TlsFixtureServer::CtxHolder {
  SSL_CTX* ctx = nullptr;
  ~CtxHolder() {
    if (ctx) SSL_CTX_free(ctx);
  }
};

TlsFixtureServer::TlsFixtureServer(const FixtureCert& cert)
    : ctx_(std::make_unique<CtxHolder>()) {
  ctx_->ctx = SSL_CTX_new(TLS_server_method());
  if (!ctx_->ctx) throw Error("server ssl context failed");

  std::unique_ptr<BIO, BioFree> cert_bio(
      BIO_new_mem_buf(cert.cert_pem.data(), static_cast<int>(cert.cert_pem.size())));
  std::unique_ptr<X509, X509Free> x509(
      PEM_read_bio_X509(cert_bio.get(), nullptr, nullptr, nullptr));
  std::unique_ptr<BIO, BioFree> key_bio(
      BIO_new_mem_buf(cert.key_pem.data(), static_cast<int>(cert.key_pem.size())));
  std::unique_ptr<EVP_PKEY, PkeyFree> key(
      PEM_read_bio_PrivateKey(key_bio.get(), nullptr, nullptr, nullptr));
  if (!x509 || !key) throw Error("fixture PEM reload failed");
  if (SSL_CTX_use_certificate(ctx_->ctx, x509.get()) != 1 ||
      SSL_CTX_use_PrivateKey(ctx_->ctx, key.get()) != 1)
    throw Error("fixture cert/key rejected");

  listen_fd_ = net::tcp_listen(port_);
  accept_thread_ = std::thread([this] { accept_loop(); });
}

TlsFixtureServer::~TlsFixtureServer() { stop(); }

void TlsFixtureServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
}

void TlsFixtureServer::accept_loop() {
  while (!stopping_) {
    int conn = ::accept(listen_fd_, nullptr, nullptr);
    if (conn < 0) break;
    // Handshake and close; the scanner only wants the certificate.
    SSL* ssl = SSL_new(ctx_->ctx);
    if (ssl) {
      SSL_set_fd(ssl, conn);
      if (SSL_accept(ssl) == 1) SSL_shutdown(ssl);
      SSL_free(ssl);
    }
    ::close(conn);
  }
}

}  // namespace ivote::certscan
