#pragma once

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>

namespace jslight::testing {

// Sends raw bytes to 127.0.0.1:port and returns everything read until the
// peer closes or `idle` passes without data.
inline std::string raw_exchange(int port, const std::string& bytes,
                                std::chrono::milliseconds idle = std::chrono::milliseconds(2000)) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        return {};
    }
    timeval tv{static_cast<time_t>(idle.count() / 1000), static_cast<suseconds_t>((idle.count() % 1000) * 1000)};
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    std::string out;
    char buf[8192];
    for (;;) {
        const auto n = ::recv(fd, buf, sizeof buf, 0);
        if (n <= 0) break;
        out.append(buf, static_cast<std::size_t>(n));
    }
    ::close(fd);
    return out;
}

inline httplib::Client proxied_client(const std::string& base_url, int proxy_port) {
    httplib::Client cli(base_url);
    cli.set_proxy("127.0.0.1", proxy_port);
    cli.set_decompress(false);
    cli.set_read_timeout(std::chrono::seconds(10));
    return cli;
}

}  // namespace jslight::testing
