#pragma once

// HTTP plumbing shared by the detector-model client and the gateway's
// upstream forwarder.

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "privgate/error.hpp"

#include <chrono>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace privgate::http {

struct Endpoint {
    std::string scheme = "http";
    std::string host;
    int port = 80;
    std::string path = "/";

    /// "scheme://host:port", the form httplib::Client accepts.
    std::string origin() const { return scheme + "://" + host + ":" + std::to_string(port); }
    std::string url() const { return origin() + path; }

    static Endpoint parse(std::string_view url) {
        Endpoint ep;
        const auto sep = url.find("://");
        if (sep == std::string_view::npos) throw ConfigError("endpoint '" + std::string(url) + "' lacks a scheme");
        ep.scheme = std::string(url.substr(0, sep));
        if (ep.scheme != "http" && ep.scheme != "https")
            throw ConfigError("unsupported endpoint scheme '" + ep.scheme + "'");
        ep.port = ep.scheme == "https" ? 443 : 80;
        const std::string rest(url.substr(sep + 3));
        const auto slash = rest.find('/');
        std::string authority = rest.substr(0, slash);
        ep.path = slash == std::string::npos ? "/" : rest.substr(slash);
        if (!authority.empty() && authority.front() == '[') {
            const auto close = authority.find(']');
            if (close == std::string_view::npos) throw ConfigError("bad IPv6 literal in '" + std::string(url) + "'");
            ep.host = std::string(authority.substr(1, close - 1));
            authority = authority.substr(close + 1);
            if (!authority.empty() && authority.front() == ':') ep.port = std::stoi(std::string(authority.substr(1)));
        } else {
            const auto colon = authority.rfind(':');
            ep.host = std::string(authority.substr(0, colon));
            if (colon != std::string_view::npos) {
                try {
                    ep.port = std::stoi(std::string(authority.substr(colon + 1)));
                } catch (const std::exception&) {
                    throw ConfigError("bad port in '" + std::string(url) + "'");
                }
            }
        }
        if (ep.host.empty()) throw ConfigError("endpoint '" + std::string(url) + "' has no host");
        if (ep.port <= 0 || ep.port > 65535) throw ConfigError("port out of range in '" + std::string(url) + "'");
        return ep;
    }
};

struct HttpOptions {
    std::chrono::milliseconds connect_timeout{5000};
    std::chrono::milliseconds read_timeout{60000};
    int retries = 2;  // extra attempts after a transport failure
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string content_type;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

/// POSTs body to the endpoint. Transport failures are retried; any HTTP
/// status (including errors) is returned to the caller as-is.
inline HttpResponse post(const Endpoint& ep, const std::string& body, const Headers& headers = {},
                         const HttpOptions& options = {}, std::string_view content_type = "application/json") {
    httplib::Client client(ep.origin());
    client.set_connection_timeout(options.connect_timeout);
    client.set_read_timeout(options.read_timeout);
    client.set_write_timeout(options.read_timeout);
    httplib::Headers hs;
    for (const auto& [k, v] : headers) hs.emplace(k, v);

    std::string last_error;
    bool last_was_timeout = false;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(ep.path, hs, body, std::string(content_type));
        if (res) return {res->status, res->body, res->get_header_value("Content-Type")};
        const auto err = res.error();
        const auto elapsed = std::chrono::steady_clock::now() - started;
        last_was_timeout = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= options.read_timeout);
        last_error = httplib::to_string(err);
    }
    const auto what = "request to " + ep.url() + " failed: " + last_error;
    if (last_was_timeout) throw TimeoutError(what);
    throw TransportError(what);
}

/// True when a TCP connection to the endpoint's origin can be opened.
inline bool reachable(const Endpoint& ep, std::chrono::milliseconds timeout = std::chrono::milliseconds(1000)) {
    httplib::Client client(ep.origin());
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    auto res = client.Get("/");
    return static_cast<bool>(res);
}

}  // namespace privgate::http
