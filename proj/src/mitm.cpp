#include "jslight/mitm.hpp"

#include <openssl/bio.h>
#include <openssl/ec.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <arpa/inet.h>

#include <fstream>
#include <sstream>

#include "jslight/error.hpp"

namespace jslight {

namespace {

struct PkeyFree {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct X509Free {
    void operator()(X509* x) const { X509_free(x); }
};
struct BioFree {
    void operator()(BIO* b) const { BIO_free(b); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyFree>;
using X509Ptr = std::unique_ptr<X509, X509Free>;
using BioPtr = std::unique_ptr<BIO, BioFree>;

std::string openssl_error(std::string_view what) {
    std::string msg(what);
    if (const auto code = ERR_get_error(); code != 0) {
        char buf[256];
        ERR_error_string_n(code, buf, sizeof buf);
        msg += ": ";
        msg += buf;
    }
    ERR_clear_error();
    return msg;
}

PkeyPtr make_ec_key() {
    PkeyPtr key(EVP_EC_gen("P-256"));
    if (!key) throw Error(openssl_error("EC key generation failed"));
    return key;
}

void set_random_serial(X509* cert) {
    unsigned char bytes[16];
    if (RAND_bytes(bytes, sizeof bytes) != 1) throw Error(openssl_error("RAND_bytes failed"));
    bytes[0] &= 0x7f;
    BIGNUM* bn = BN_bin2bn(bytes, sizeof bytes, nullptr);
    BN_to_ASN1_INTEGER(bn, X509_get_serialNumber(cert));
    BN_free(bn);
}

void add_ext(X509* cert, X509* issuer, int nid, const std::string& value) {
    X509V3_CTX ctx;
    X509V3_set_ctx_nodb(&ctx);
    X509V3_set_ctx(&ctx, issuer, cert, nullptr, nullptr, 0);
    X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &ctx, nid, value.c_str());
    if (!ext) throw Error(openssl_error("bad certificate extension " + value));
    X509_add_ext(cert, ext, -1);
    X509_EXTENSION_free(ext);
}

std::string to_pem(X509* cert) {
    BioPtr bio(BIO_new(BIO_s_mem()));
    PEM_write_bio_X509(bio.get(), cert);
    char* data = nullptr;
    const long n = BIO_get_mem_data(bio.get(), &data);
    return {data, static_cast<std::size_t>(n)};
}

std::string to_pem(EVP_PKEY* key) {
    BioPtr bio(BIO_new(BIO_s_mem()));
    PEM_write_bio_PrivateKey(bio.get(), key, nullptr, nullptr, 0, nullptr, nullptr);
    char* data = nullptr;
    const long n = BIO_get_mem_data(bio.get(), &data);
    return {data, static_cast<std::size_t>(n)};
}

bool is_ip_literal(const std::string& host) {
    unsigned char buf[16];
    std::string h = host;
    if (h.size() > 2 && h.front() == '[' && h.back() == ']') h = h.substr(1, h.size() - 2);
    return inet_pton(AF_INET, h.c_str(), buf) == 1 || inet_pton(AF_INET6, h.c_str(), buf) == 1;
}

}  // namespace

struct CertificateAuthority::Keys {
    PkeyPtr ca_key;
    X509Ptr ca_cert;
    PkeyPtr leaf_key;  // shared by every minted leaf
};

CertificateAuthority::CertificateAuthority(CertificateAuthority&&) noexcept = default;
CertificateAuthority& CertificateAuthority::operator=(CertificateAuthority&&) noexcept = default;
CertificateAuthority::~CertificateAuthority() = default;

CertificateAuthority CertificateAuthority::load(const std::filesystem::path& pem_path) {
    std::ifstream in(pem_path, std::ios::binary);
    if (!in) throw Error("cannot open CA file " + pem_path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string pem = buf.str();

    CertificateAuthority ca;
    ca.keys_ = std::make_unique<Keys>();
    BioPtr cert_bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
    ca.keys_->ca_cert.reset(PEM_read_bio_X509(cert_bio.get(), nullptr, nullptr, nullptr));
    BioPtr key_bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
    ca.keys_->ca_key.reset(PEM_read_bio_PrivateKey(key_bio.get(), nullptr, nullptr, nullptr));
    if (!ca.keys_->ca_cert) throw Error(openssl_error("no CA certificate in " + pem_path.string()));
    if (!ca.keys_->ca_key) throw Error(openssl_error("no CA private key in " + pem_path.string()));
    if (X509_check_private_key(ca.keys_->ca_cert.get(), ca.keys_->ca_key.get()) != 1) {
        throw Error(openssl_error("CA key does not match the certificate"));
    }
    ca.keys_->leaf_key = make_ec_key();
    return ca;
}

CertificateAuthority CertificateAuthority::generate(const std::string& common_name) {
    CertificateAuthority ca;
    ca.keys_ = std::make_unique<Keys>();
    ca.keys_->ca_key = make_ec_key();
    X509Ptr cert(X509_new());
    X509_set_version(cert.get(), 2);
    set_random_serial(cert.get());
    X509_gmtime_adj(X509_getm_notBefore(cert.get()), -24 * 3600);
    X509_gmtime_adj(X509_getm_notAfter(cert.get()), 10L * 365 * 24 * 3600);
    X509_set_pubkey(cert.get(), ca.keys_->ca_key.get());
    X509_NAME* name = X509_get_subject_name(cert.get());
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_UTF8,
                               reinterpret_cast<const unsigned char*>(common_name.c_str()), -1, -1, 0);
    X509_set_issuer_name(cert.get(), name);
    add_ext(cert.get(), cert.get(), NID_basic_constraints, "critical,CA:TRUE");
    add_ext(cert.get(), cert.get(), NID_key_usage, "critical,keyCertSign,cRLSign");
    add_ext(cert.get(), cert.get(), NID_subject_key_identifier, "hash");
    if (X509_sign(cert.get(), ca.keys_->ca_key.get(), EVP_sha256()) == 0) {
        throw Error(openssl_error("CA self-signing failed"));
    }
    ca.keys_->ca_cert = std::move(cert);
    ca.keys_->leaf_key = make_ec_key();
    return ca;
}

std::string CertificateAuthority::certificate_pem() const { return to_pem(keys_->ca_cert.get()); }

std::string CertificateAuthority::private_key_pem() const { return to_pem(keys_->ca_key.get()); }

void CertificateAuthority::save(const std::filesystem::path& pem_path) const {
    std::ofstream out(pem_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + pem_path.string());
    out << certificate_pem() << private_key_pem();
    if (!out) throw Error("write failed for " + pem_path.string());
}

namespace {

X509Ptr mint_leaf(X509* ca_cert, EVP_PKEY* ca_key, EVP_PKEY* leaf_key, const std::string& host) {
    X509Ptr cert(X509_new());
    X509_set_version(cert.get(), 2);
    set_random_serial(cert.get());
    X509_gmtime_adj(X509_getm_notBefore(cert.get()), -24 * 3600);
    X509_gmtime_adj(X509_getm_notAfter(cert.get()), 365L * 24 * 3600);
    X509_set_pubkey(cert.get(), leaf_key);
    X509_NAME* name = X509_get_subject_name(cert.get());
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_UTF8, reinterpret_cast<const unsigned char*>(host.c_str()), -1,
                               -1, 0);
    X509_set_issuer_name(cert.get(), X509_get_subject_name(ca_cert));
    std::string bare = host;
    if (bare.size() > 2 && bare.front() == '[' && bare.back() == ']') bare = bare.substr(1, bare.size() - 2);
    add_ext(cert.get(), ca_cert, NID_subject_alt_name, (is_ip_literal(host) ? "IP:" : "DNS:") + bare);
    add_ext(cert.get(), ca_cert, NID_basic_constraints, "critical,CA:FALSE");
    add_ext(cert.get(), ca_cert, NID_ext_key_usage, "serverAuth");
    add_ext(cert.get(), ca_cert, NID_authority_key_identifier, "keyid:always");
    if (X509_sign(cert.get(), ca_key, EVP_sha256()) == 0) throw Error(openssl_error("leaf signing failed"));
    return cert;
}

}  // namespace

std::pair<std::string, std::string> CertificateAuthority::issue_leaf_pem(const std::string& host) {
    std::lock_guard lock(*mu_);
    auto leaf = mint_leaf(keys_->ca_cert.get(), keys_->ca_key.get(), keys_->leaf_key.get(), host);
    return {to_pem(leaf.get()), to_pem(keys_->leaf_key.get())};
}

std::shared_ptr<SSL_CTX> CertificateAuthority::server_context(const std::string& host) {
    std::lock_guard lock(*mu_);
    if (auto it = contexts_.find(host); it != contexts_.end()) return it->second;

    auto leaf = mint_leaf(keys_->ca_cert.get(), keys_->ca_key.get(), keys_->leaf_key.get(), host);
    std::shared_ptr<SSL_CTX> ctx(SSL_CTX_new(TLS_server_method()), SSL_CTX_free);
    if (!ctx) throw Error(openssl_error("SSL_CTX_new failed"));
    SSL_CTX_set_min_proto_version(ctx.get(), TLS1_2_VERSION);
    if (SSL_CTX_use_certificate(ctx.get(), leaf.get()) != 1 ||
        SSL_CTX_add1_chain_cert(ctx.get(), keys_->ca_cert.get()) != 1 ||
        SSL_CTX_use_PrivateKey(ctx.get(), keys_->leaf_key.get()) != 1) {
        throw Error(openssl_error("cannot install leaf certificate"));
    }
    contexts_.emplace(host, ctx);
    return ctx;
}

TlsServerStream::TlsServerStream(int fd, std::shared_ptr<SSL_CTX> ctx) : ctx_(std::move(ctx)) {
    ssl_ = SSL_new(ctx_.get());
    if (!ssl_) throw Error(openssl_error("SSL_new failed"));
    SSL_set_fd(ssl_, fd);
    if (SSL_accept(ssl_) != 1) {
        const auto msg = openssl_error("TLS handshake with client failed");
        SSL_free(ssl_);
        ssl_ = nullptr;
        throw Error(msg);
    }
}

TlsServerStream::~TlsServerStream() {
    if (ssl_) {
        SSL_shutdown(ssl_);
        SSL_free(ssl_);
    }
}

long TlsServerStream::read_some(char* buf, std::size_t len) {
    const int n = SSL_read(ssl_, buf, static_cast<int>(std::min<std::size_t>(len, 1 << 30)));
    if (n > 0) return n;
    const int err = SSL_get_error(ssl_, n);
    ERR_clear_error();
    return err == SSL_ERROR_ZERO_RETURN ? 0 : -1;
}

bool TlsServerStream::write_all(std::string_view data) {
    while (!data.empty()) {
        const int n = SSL_write(ssl_, data.data(), static_cast<int>(std::min<std::size_t>(data.size(), 1 << 30)));
        if (n <= 0) {
            ERR_clear_error();
            return false;
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

}  // namespace jslight
