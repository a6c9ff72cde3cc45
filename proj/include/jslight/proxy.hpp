#pragma once

#include <array>
#include <chrono>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "jslight/category.hpp"
#include "jslight/fetch.hpp"
#include "jslight/http_wire.hpp"
#include "jslight/label_store.hpp"
#include "jslight/policy.hpp"

namespace jslight {

class CertificateAuthority;

// Body of every blocked script response.
inline constexpr std::string_view kStubBody = "/*slimweb-blocked*/\n";

// Response header marking a stub, so harnesses can count blocks.
inline constexpr std::string_view kBlockedHeader = "X-Jslight-Blocked";

struct ProxyRequest {
    std::string method;
    std::string url;
    bool is_script_context = false;
    std::optional<std::string> page_origin;
};

enum class Verdict { allow, block };

struct Decision {
    Verdict verdict = Verdict::allow;
    std::optional<LabelEntry> label;
};

// .js / .mjs path extension, or a client-declared script destination
// (Sec-Fetch-Dest: script).
bool is_script_request(std::string_view url, const HeaderList& headers);

// Page origin from the Referer header, if it holds an absolute URL.
std::optional<std::string> page_origin_from(const HeaderList& headers);

// Blocks only a script request whose label resolves and whose category is
// noncritical for the page. Any failure while looking up the label allows.
Decision decide(const ProxyRequest& request, LabelSource& store, const Policy& policy);

// 200, JavaScript content type, caching disabled, body kStubBody.
HttpResponse stub_response();

struct ProxyTelemetry {
    std::uint64_t requests_total = 0;
    std::uint64_t requests_blocked = 0;
    std::uint64_t bytes_upstream_saved = 0;
    std::array<std::uint64_t, kCategoryCount + 1> blocked_by_category{};

    bool operator==(const ProxyTelemetry&) const = default;
};

std::string telemetry_to_json(const ProxyTelemetry& t);

// Lock-free counters, each updated atomically.
class Telemetry {
public:
    void record_request() { total_.fetch_add(1, std::memory_order_relaxed); }
    void record_block(Category c, std::uint64_t known_bytes);
    ProxyTelemetry snapshot() const;

private:
    std::atomic<std::uint64_t> total_{0};
    std::atomic<std::uint64_t> blocked_{0};
    std::atomic<std::uint64_t> saved_{0};
    std::array<std::atomic<std::uint64_t>, kCategoryCount + 1> by_category_{};
};

struct ProxyConfig {
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;  // 0 picks an ephemeral port
    std::shared_ptr<LabelSource> store;
    Policy policy;
    std::shared_ptr<CertificateAuthority> mitm_ca;  // null: CONNECT is tunneled opaquely
    std::optional<std::pair<std::string, int>> admin_listen;
    std::chrono::seconds upstream_connect_timeout{10};
    std::chrono::seconds upstream_read_timeout{30};
    std::chrono::seconds client_idle_timeout{60};
    bool verify_upstream_tls = true;
};

// HTTP/1.1 forward proxy applying decide() to every request. Plain
// requests arrive in absolute form; CONNECT tunnels are relayed opaquely,
// or terminated and inspected when a CA is configured.
class ProxyServer {
public:
    explicit ProxyServer(ProxyConfig config);
    ~ProxyServer();
    ProxyServer(const ProxyServer&) = delete;
    ProxyServer& operator=(const ProxyServer&) = delete;

    // Binds and starts serving in background threads. Throws jslight::Error
    // on bind failure.
    void start();
    // Stops accepting, closes live connections and joins every thread.
    void stop();

    int port() const { return port_; }
    std::optional<int> admin_port() const;
    ProxyTelemetry telemetry_snapshot() const { return telemetry_.snapshot(); }

private:
    struct Admin;

    void accept_loop();
    void handle_connection(int fd);
    // Serves requests from `stream` until it closes. `tls_authority` is set
    // inside an intercepted tunnel: origin-form targets resolve against it.
    void serve_stream(Stream& stream, int fd, const std::optional<std::string>& tls_authority);
    HttpResponse forward(const HttpRequest& req, const std::string& url, bool tls);
    void handle_connect(const HttpRequest& req, int fd, SocketStream& stream);
    void remember_length(const std::string& url, const HttpResponse& resp);
    std::uint64_t known_length(const std::string& url) const;

    ProxyConfig config_;
    Telemetry telemetry_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;

    std::mutex conn_mu_;
    std::set<int> open_fds_;
    std::unordered_map<std::thread::id, std::thread> workers_;
    std::vector<std::thread> finished_;

    mutable std::shared_mutex len_mu_;
    std::unordered_map<std::string, std::uint64_t> lengths_;

    std::unique_ptr<Admin> admin_;
};

}  // namespace jslight
