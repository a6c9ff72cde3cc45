#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "jslight/http_wire.hpp"

using SSL_CTX = struct ssl_ctx_st;
using SSL = struct ssl_st;
using EVP_PKEY = struct evp_pkey_st;
using X509 = struct x509_st;

namespace jslight {

// A user-supplied root CA used to mint per-host leaf certificates for TLS
// interception. Clients must trust the root for interception to work.
class CertificateAuthority {
public:
    // PEM file holding the CA certificate and its private key (any order).
    // Throws jslight::Error when either is missing or they do not match.
    static CertificateAuthority load(const std::filesystem::path& pem_path);

    // Fresh self-signed P-256 root, valid for ten years.
    static CertificateAuthority generate(const std::string& common_name);

    CertificateAuthority(CertificateAuthority&&) noexcept;
    CertificateAuthority& operator=(CertificateAuthority&&) noexcept;
    ~CertificateAuthority();

    std::string certificate_pem() const;
    std::string private_key_pem() const;
    // Writes certificate then key.
    void save(const std::filesystem::path& pem_path) const;

    // Server-side TLS context presenting a leaf for `host` (DNS name or IP
    // literal) signed by this CA. Cached per host.
    std::shared_ptr<SSL_CTX> server_context(const std::string& host);

    // Leaf certificate + key for `host`, as PEM, without caching. Used to
    // stand up TLS test servers that chain to this root.
    std::pair<std::string, std::string> issue_leaf_pem(const std::string& host);

private:
    CertificateAuthority() = default;

    struct Keys;
    std::unique_ptr<Keys> keys_;
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
    std::map<std::string, std::shared_ptr<SSL_CTX>> contexts_;
};

// Server side of an intercepted TLS session over a connected socket.
class TlsServerStream : public Stream {
public:
    // Performs the handshake; throws jslight::Error when it fails.
    TlsServerStream(int fd, std::shared_ptr<SSL_CTX> ctx);
    ~TlsServerStream() override;
    TlsServerStream(const TlsServerStream&) = delete;
    TlsServerStream& operator=(const TlsServerStream&) = delete;

    long read_some(char* buf, std::size_t len) override;
    bool write_all(std::string_view data) override;

private:
    std::shared_ptr<SSL_CTX> ctx_;
    SSL* ssl_ = nullptr;
};

}  // namespace jslight
