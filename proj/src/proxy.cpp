#include "jslight/proxy.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <algorithm>
#include <cctype>
#include <cstring>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "jslight/error.hpp"
#include "jslight/mitm.hpp"
#include "jslight/url.hpp"

namespace jslight {

bool is_script_request(std::string_view url, const HeaderList& headers) {
    for (const auto& [k, v] : headers) {
        if (iequals(k, "Sec-Fetch-Dest") && iequals(v, "script")) return true;
    }
    auto parsed = parse_url(url);
    if (!parsed) return false;
    std::string_view path = parsed->path;
    const auto slash = path.rfind('/');
    const auto last = slash == std::string_view::npos ? path : path.substr(slash + 1);
    const auto dot = last.rfind('.');
    if (dot == std::string_view::npos) return false;
    const auto ext = last.substr(dot + 1);
    return iequals(ext, "js") || iequals(ext, "mjs");
}

std::optional<std::string> page_origin_from(const HeaderList& headers) {
    for (const auto& [k, v] : headers) {
        if (iequals(k, "Referer")) return url_origin(v);
    }
    return std::nullopt;
}

Decision decide(const ProxyRequest& request, LabelSource& store, const Policy& policy) {
    if (!request.is_script_context) return {};
    try {
        auto label = store.get(request.url);
        if (!label) return {};
        const auto origin = request.page_origin ? std::optional<std::string_view>(*request.page_origin) : std::nullopt;
        if (decide_criticality(label->category, policy, origin) != Criticality::noncritical) {
            return {Verdict::allow, std::move(label)};
        }
        return {Verdict::block, std::move(label)};
    } catch (const std::exception& e) {
        spdlog::debug("label lookup failed for {}: {}; allowing", request.url, e.what());
    } catch (...) {
        spdlog::debug("label lookup failed for {}; allowing", request.url);
    }
    return {};
}

HttpResponse stub_response() {
    HttpResponse r;
    r.status = 200;
    r.headers = {
        {"Content-Type", "application/javascript; charset=utf-8"},
        {"Cache-Control", "no-store, no-cache, must-revalidate, max-age=0"},
        {"Pragma", "no-cache"},
        {"Expires", "0"},
        {std::string(kBlockedHeader), "1"},
    };
    r.body = std::string(kStubBody);
    return r;
}

void Telemetry::record_block(Category c, std::uint64_t known_bytes) {
    blocked_.fetch_add(1, std::memory_order_relaxed);
    saved_.fetch_add(known_bytes, std::memory_order_relaxed);
    by_category_[static_cast<std::size_t>(c)].fetch_add(1, std::memory_order_relaxed);
}

ProxyTelemetry Telemetry::snapshot() const {
    ProxyTelemetry t;
    // Read blocked-side counters first: every block is preceded by its
    // request increment, so requests_blocked <= requests_total holds.
    t.requests_blocked = blocked_.load();
    t.bytes_upstream_saved = saved_.load();
    for (std::size_t i = 0; i < by_category_.size(); ++i) t.blocked_by_category[i] = by_category_[i].load();
    t.requests_total = total_.load();
    return t;
}

std::string telemetry_to_json(const ProxyTelemetry& t) {
    nlohmann::ordered_json j;
    j["requests_total"] = t.requests_total;
    j["requests_blocked"] = t.requests_blocked;
    j["bytes_upstream_saved"] = t.bytes_upstream_saved;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < t.blocked_by_category.size(); ++i) {
        per[std::string(to_string(static_cast<Category>(i)))] = t.blocked_by_category[i];
    }
    j["blocked_by_category"] = per;
    return j.dump();
}

namespace {

int connect_tcp(const std::string& host, int port, std::chrono::seconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    std::string h = host;
    if (h.size() > 2 && h.front() == '[' && h.back() == ']') h = h.substr(1, h.size() - 2);
    if (getaddrinfo(h.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) return -1;
    int fd = -1;
    for (auto* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) continue;
        const int flags = fcntl(fd, F_GETFL, 0);
        fcntl(fd, F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
        if (rc < 0 && errno == EINPROGRESS) {
            pollfd p{fd, POLLOUT, 0};
            rc = ::poll(&p, 1, static_cast<int>(timeout.count() * 1000)) == 1 ? 0 : -1;
            int err = 0;
            socklen_t len = sizeof err;
            if (rc == 0 && (getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) != 0 || err != 0)) rc = -1;
        }
        if (rc == 0) {
            fcntl(fd, F_SETFL, flags);
            break;
        }
        ::close(fd);
        fd = -1;
    }
    freeaddrinfo(res);
    return fd;
}

// Copies bytes both ways until either side closes.
void relay(int a, int b) {
    std::array<char, 16384> buf{};
    pollfd fds[2] = {{a, POLLIN, 0}, {b, POLLIN, 0}};
    for (;;) {
        if (::poll(fds, 2, 60'000) <= 0) return;
        for (int i = 0; i < 2; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            const auto n = ::recv(fds[i].fd, buf.data(), buf.size(), 0);
            if (n <= 0) return;
            SocketStream out(fds[1 - i].fd);
            if (!out.write_all({buf.data(), static_cast<std::size_t>(n)})) return;
        }
    }
}

HttpResponse error_response(int status, const std::string& message) {
    HttpResponse r;
    r.status = status;
    r.headers = {{"Content-Type", "text/plain; charset=utf-8"}, {"Connection", "close"}};
    r.body = message + "\n";
    return r;
}

}  // namespace

struct ProxyServer::Admin {
    httplib::Server server;
    std::thread thread;
    int port = 0;
};

ProxyServer::ProxyServer(ProxyConfig config) : config_(std::move(config)) {}

ProxyServer::~ProxyServer() { stop(); }

std::optional<int> ProxyServer::admin_port() const {
    if (!admin_) return std::nullopt;
    return admin_->port;
}

void ProxyServer::start() {
    if (running_) return;
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (getaddrinfo(config_.listen_host.c_str(), std::to_string(config_.listen_port).c_str(), &hints, &res) != 0) {
        throw Error("cannot resolve listen address " + config_.listen_host);
    }
    for (auto* ai = res; ai && listen_fd_ < 0; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) continue;
        const int one = 1;
        setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 256) == 0) {
            listen_fd_ = fd;
        } else {
            ::close(fd);
        }
    }
    freeaddrinfo(res);
    if (listen_fd_ < 0) {
        throw Error("cannot bind proxy to " + config_.listen_host + ":" + std::to_string(config_.listen_port) + ": " +
                    std::strerror(errno));
    }
    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                             : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);

    if (config_.admin_listen) {
        admin_ = std::make_unique<Admin>();
        admin_->server.Get("/telemetry", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(telemetry_to_json(telemetry_snapshot()), "application/json");
        });
        const auto& [host, port] = *config_.admin_listen;
        admin_->port = port == 0 ? admin_->server.bind_to_any_port(host) : port;
        if (admin_->port < 0 || (port != 0 && !admin_->server.bind_to_port(host, port))) {
            ::close(listen_fd_);
            listen_fd_ = -1;
            admin_.reset();
            throw Error("cannot bind admin endpoint to " + host + ":" + std::to_string(port));
        }
        admin_->thread = std::thread([a = admin_.get()] { a->server.listen_after_bind(); });
    }

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void ProxyServer::stop() {
    if (!running_.exchange(false)) return;
    if (accept_thread_.joinable()) accept_thread_.join();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    std::vector<std::thread> to_join;
    {
        std::lock_guard lock(conn_mu_);
        for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
        for (auto& [id, t] : workers_) to_join.push_back(std::move(t));
        workers_.clear();
        for (auto& t : finished_) to_join.push_back(std::move(t));
        finished_.clear();
    }
    for (auto& t : to_join) {
        if (t.joinable()) t.join();
    }
    if (admin_) {
        admin_->server.stop();
        if (admin_->thread.joinable()) admin_->thread.join();
    }
}

void ProxyServer::accept_loop() {
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, 100);
        {
            std::vector<std::thread> done;
            {
                std::lock_guard lock(conn_mu_);
                done.swap(finished_);
            }
            for (auto& t : done) t.join();
        }
        if (rc <= 0 || !(p.revents & POLLIN)) continue;
        const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) continue;
        timeval tv{static_cast<time_t>(config_.client_idle_timeout.count()), 0};
        setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
        const int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

        std::lock_guard lock(conn_mu_);
        open_fds_.insert(fd);
        std::thread t([this, fd] {
            try {
                handle_connection(fd);
            } catch (const std::exception& e) {
                spdlog::debug("proxy connection error: {}", e.what());
            }
            std::lock_guard inner(conn_mu_);
            open_fds_.erase(fd);
            ::close(fd);
            if (auto it = workers_.find(std::this_thread::get_id()); it != workers_.end()) {
                finished_.push_back(std::move(it->second));
                workers_.erase(it);
            }
        });
        const auto id = t.get_id();
        workers_.emplace(id, std::move(t));
    }
}

void ProxyServer::handle_connection(int fd) {
    SocketStream stream(fd);
    serve_stream(stream, fd, std::nullopt);
}

void ProxyServer::serve_stream(Stream& stream, int fd, const std::optional<std::string>& tls_authority) {
    RequestReader reader(stream);
    while (running_) {
        std::optional<HttpRequest> req;
        try {
            req = reader.next();
        } catch (const HttpParseError& e) {
            stream.write_all(error_response(400, e.what()).serialize());
            return;
        }
        if (!req) return;

        if (iequals(req->method, "CONNECT")) {
            if (tls_authority) {
                stream.write_all(error_response(400, "nested CONNECT").serialize());
                return;
            }
            handle_connect(*req, fd, static_cast<SocketStream&>(stream));
            return;
        }

        std::string url;
        if (tls_authority && req->target.starts_with('/')) {
            url = "https://" + *tls_authority + req->target;
        } else if (auto parsed = parse_url(req->target);
                   parsed && parsed->has_authority && !parsed->host.empty() &&
                   (parsed->scheme == "http" || (tls_authority && parsed->scheme == "https"))) {
            url = req->target;
        } else {
            stream.write_all(error_response(400, "expected an absolute-form http:// request target").serialize());
            return;
        }

        telemetry_.record_request();
        ProxyRequest pr{req->method, url, is_script_request(url, req->headers), page_origin_from(req->headers)};
        Decision d;
        if (config_.store) d = decide(pr, *config_.store, config_.policy);

        bool ok = false;
        if (d.verdict == Verdict::block) {
            telemetry_.record_block(d.label ? d.label->category : Category::unassigned, known_length(url));
            ok = stream.write_all(stub_response().serialize());
        } else {
            const HttpResponse resp = forward(*req, url, tls_authority.has_value());
            remember_length(url, resp);
            std::optional<std::size_t> length;
            if (iequals(req->method, "HEAD")) {
                if (auto cl = resp.header("Content-Length")) {
                    try {
                        length = std::stoull(*cl);
                    } catch (const std::exception&) {
                        length = 0;
                    }
                } else {
                    length = 0;
                }
            }
            std::string wire = resp.serialize(length);
            if (iequals(req->method, "HEAD")) wire.resize(wire.size() - resp.body.size());
            ok = stream.write_all(wire);
        }
        if (!ok || !req->keep_alive()) return;
    }
}

HttpResponse ProxyServer::forward(const HttpRequest& req, const std::string& url, bool tls) {
    const auto parsed = parse_url(url);
    if (!parsed) return error_response(400, "bad request URL");
    const std::string base =
        parsed->scheme + "://" + parsed->host + (parsed->port ? ":" + std::to_string(*parsed->port) : "");
    httplib::Client cli(base);
    cli.set_connection_timeout(config_.upstream_connect_timeout);
    cli.set_read_timeout(config_.upstream_read_timeout);
    cli.set_write_timeout(config_.upstream_read_timeout);
    cli.set_follow_location(false);
    cli.set_decompress(false);
    cli.set_keep_alive(false);
    if (tls || parsed->scheme == "https") cli.enable_server_certificate_verification(config_.verify_upstream_tls);

    httplib::Request out;
    out.method = req.method;
    out.path = parsed->request_target();
    for (const auto& [k, v] : req.headers) {
        if (is_hop_by_hop(k) || iequals(k, "Host") || iequals(k, "Content-Length")) continue;
        out.headers.emplace(k, v);
    }
    out.body = req.body;

    auto res = cli.send(out);
    if (!res) return error_response(502, "upstream request failed: " + httplib::to_string(res.error()));

    HttpResponse resp;
    resp.status = res->status;
    resp.reason = res->reason;
    for (const auto& [k, v] : res->headers) {
        if (is_hop_by_hop(k)) continue;
        if (iequals(k, "Content-Length") && !iequals(req.method, "HEAD")) continue;
        resp.headers.emplace_back(k, v);
    }
    resp.body = std::move(res->body);
    return resp;
}

void ProxyServer::handle_connect(const HttpRequest& req, int fd, SocketStream& stream) {
    const auto& target = req.target;
    const auto colon = target.rfind(':');
    if (colon == std::string::npos || colon == 0 || target.find('/') != std::string::npos) {
        stream.write_all(error_response(400, "CONNECT target must be host:port").serialize());
        return;
    }
    const std::string host = target.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(target.substr(colon + 1));
    } catch (const std::exception&) {
        port = 0;
    }
    if (port <= 0 || port > 65535) {
        stream.write_all(error_response(400, "bad CONNECT port").serialize());
        return;
    }

    if (config_.mitm_ca) {
        std::shared_ptr<SSL_CTX> ctx;
        try {
            std::string bare = host;
            std::transform(bare.begin(), bare.end(), bare.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            ctx = config_.mitm_ca->server_context(bare);
        } catch (const std::exception& e) {
            stream.write_all(error_response(502, e.what()).serialize());
            return;
        }
        if (!stream.write_all("HTTP/1.1 200 Connection Established\r\n\r\n")) return;
        TlsServerStream tls(fd, std::move(ctx));
        const std::string authority = port == 443 ? host : host + ":" + std::to_string(port);
        serve_stream(tls, fd, authority);
        return;
    }

    // An opaque tunnel is one request; intercepted tunnels count their inner requests.
    telemetry_.record_request();
    const int upstream = connect_tcp(host, port, config_.upstream_connect_timeout);
    if (upstream < 0) {
        stream.write_all(error_response(502, "cannot reach " + target).serialize());
        return;
    }
    {
        std::lock_guard lock(conn_mu_);
        open_fds_.insert(upstream);
    }
    if (stream.write_all("HTTP/1.1 200 Connection Established\r\n\r\n")) relay(fd, upstream);
    std::lock_guard lock(conn_mu_);
    open_fds_.erase(upstream);
    ::close(upstream);
}

void ProxyServer::remember_length(const std::string& url, const HttpResponse& resp) {
    if (resp.status != 200 || !is_script_request(url, {})) return;
    std::unique_lock lock(len_mu_);
    if (lengths_.size() >= 100'000) lengths_.clear();
    lengths_[url] = resp.body.size();
}

std::uint64_t ProxyServer::known_length(const std::string& url) const {
    std::shared_lock lock(len_mu_);
    auto it = lengths_.find(url);
    return it == lengths_.end() ? 0 : it->second;
}

}  // namespace jslight
