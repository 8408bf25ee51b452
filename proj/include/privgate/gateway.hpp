#pragma once

// Privacy gateway in front of a chat-completion endpoint: detect on the last
// user message, forward safe requests untouched, encrypt entities in unsafe
// ones, restore them in the upstream reply, and audit every request.

#include "privgate/anonymizer.hpp"
#include "privgate/crypto.hpp"
#include "privgate/detector.hpp"
#include "privgate/dlms_client.hpp"
#include "privgate/error.hpp"
#include "privgate/fpe/ff3.hpp"
#include "privgate/http.hpp"
#include "privgate/map_store.hpp"
#include "privgate/policy.hpp"
#include "privgate/text.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace privgate::gateway {

using nlohmann::json;

enum class DetectorMode { BuiltinPattern, RemoteDlms };
enum class UnsafeAction { Sanitize, Block };

struct RemoteDlmsConfig {
    std::string endpoint;
    std::string model = "dlms";
    std::string api_key;
    std::string template_kind = "sft";  // sft | rft-zero-shot | rft-few-shot
};

struct KeySource {
    std::string env = "PRIVGATE_FPE_KEY";  // hex key in this variable, used when file is empty
    std::string file;                       // hex key file
    std::string key_id = "k1";
};

struct GatewayConfig {
    std::string listen_host = "127.0.0.1";
    int listen_port = 8088;
    std::string upstream_url;
    std::string upstream_api_key;
    DetectorMode detector_mode = DetectorMode::BuiltinPattern;
    RemoteDlmsConfig dlms;
    std::string catalog = "builtin:taxonomy";  // a path, or builtin:taxonomy / builtin:policies
    KeySource key;
    std::string audit_log = "privgate-audit.jsonl";
    std::string map_store;  // empty disables entity-map persistence
    int connect_timeout_ms = 5000;
    int read_timeout_ms = 60000;
    int retries = 1;
    bool block_on_detector_failure = true;
    UnsafeAction unsafe_action = UnsafeAction::Sanitize;
};

namespace detail {

template <class T>
void read(const json& j, const char* field, T& out) {
    if (!j.contains(field)) return;
    try {
        out = j.at(field).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + field + "' has the wrong type");
    }
}

inline std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace detail

/// Parses the config document, then applies environment overrides:
/// PRIVGATE_UPSTREAM_URL, PRIVGATE_UPSTREAM_API_KEY, PRIVGATE_DLMS_API_KEY.
inline GatewayConfig load_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    GatewayConfig c;
    if (j.contains("listen")) {
        const auto& l = j["listen"];
        detail::read(l, "host", c.listen_host);
        detail::read(l, "port", c.listen_port);
    }
    if (j.contains("upstream")) {
        const auto& u = j["upstream"];
        detail::read(u, "url", c.upstream_url);
        detail::read(u, "api_key", c.upstream_api_key);
    }
    if (j.contains("detector")) {
        const auto& d = j["detector"];
        std::string mode = "pattern";
        detail::read(d, "mode", mode);
        if (mode == "pattern")
            c.detector_mode = DetectorMode::BuiltinPattern;
        else if (mode == "remote")
            c.detector_mode = DetectorMode::RemoteDlms;
        else
            throw ConfigError("detector.mode must be 'pattern' or 'remote'");
        detail::read(d, "endpoint", c.dlms.endpoint);
        detail::read(d, "model", c.dlms.model);
        detail::read(d, "api_key", c.dlms.api_key);
        detail::read(d, "template", c.dlms.template_kind);
        detail::read(d, "block_on_failure", c.block_on_detector_failure);
    }
    detail::read(j, "catalog", c.catalog);
    if (j.contains("key")) {
        const auto& k = j["key"];
        detail::read(k, "env", c.key.env);
        detail::read(k, "file", c.key.file);
        detail::read(k, "key_id", c.key.key_id);
    }
    detail::read(j, "audit_log", c.audit_log);
    detail::read(j, "map_store", c.map_store);
    if (j.contains("timeouts")) {
        const auto& t = j["timeouts"];
        detail::read(t, "connect_ms", c.connect_timeout_ms);
        detail::read(t, "read_ms", c.read_timeout_ms);
        detail::read(t, "retries", c.retries);
    }
    if (j.contains("unsafe_action")) {
        std::string a;
        detail::read(j, "unsafe_action", a);
        if (a == "sanitize")
            c.unsafe_action = UnsafeAction::Sanitize;
        else if (a == "block")
            c.unsafe_action = UnsafeAction::Block;
        else
            throw ConfigError("unsafe_action must be 'sanitize' or 'block'");
    }

    c.upstream_url = detail::env_or("PRIVGATE_UPSTREAM_URL", c.upstream_url);
    c.upstream_api_key = detail::env_or("PRIVGATE_UPSTREAM_API_KEY", c.upstream_api_key);
    c.dlms.api_key = detail::env_or("PRIVGATE_DLMS_API_KEY", c.dlms.api_key);

    if (c.upstream_url.empty()) throw ConfigError("upstream.url is required");
    const auto up = http::Endpoint::parse(c.upstream_url);
    if (c.listen_port < 0 || c.listen_port > 65535) throw ConfigError("listen.port out of range");
    if (up.host == c.listen_host && up.port == c.listen_port)
        throw ConfigError("upstream and listen addresses must differ");
    if (c.connect_timeout_ms <= 0 || c.read_timeout_ms <= 0) throw ConfigError("timeouts must be positive");
    if (c.retries < 0) throw ConfigError("timeouts.retries must be non-negative");
    if (c.detector_mode == DetectorMode::RemoteDlms) {
        if (c.dlms.endpoint.empty()) throw ConfigError("detector.endpoint is required in remote mode");
        http::Endpoint::parse(c.dlms.endpoint);
        if (c.dlms.template_kind != "sft" && c.dlms.template_kind != "rft-zero-shot" &&
            c.dlms.template_kind != "rft-few-shot")
            throw ConfigError("detector.template must be sft, rft-zero-shot or rft-few-shot");
    }
    return c;
}

inline GatewayConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return load_config(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

inline policy::PolicyCatalog load_catalog_source(const std::string& source) {
    if (source == "builtin:taxonomy") return policy::builtin_taxonomy();
    if (source == "builtin:policies") return policy::builtin_policies();
    try {
        return policy::load_catalog_file(source);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("catalog " + source + ": " + e.what());
    }
}

inline fpe::Ff3Key load_key(const KeySource& src) {
    if (!src.file.empty()) return fpe::key_from_file(src.file, src.key_id);
    return fpe::key_from_env(src.env, src.key_id);
}

// --- audit -----------------------------------------------------------------

enum class Outcome { Forwarded, ForwardedSanitized, Blocked, Error };

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Forwarded: return "forwarded";
        case Outcome::ForwardedSanitized: return "forwarded_sanitized";
        case Outcome::Blocked: return "blocked";
        case Outcome::Error: return "error";
    }
    return "error";
}

inline constexpr int kAuditSchemaVersion = 1;

/// Carries no entity plaintext and no ciphertext.
struct AuditRecord {
    std::string request_id;
    std::chrono::system_clock::time_point timestamp;
    std::optional<Safety> safety;  // unset when detection failed
    CodeSet categories;
    std::size_t entity_count = 0;
    std::size_t fallback_count = 0;
    std::optional<double> upstream_latency_ms;
    Outcome outcome = Outcome::Error;
    int status = 0;
    std::string detail;  // error class or reason, never request content
};

inline std::string iso8601(std::chrono::system_clock::time_point t) {
    const auto secs = std::chrono::system_clock::to_time_t(t);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

inline json to_json(const AuditRecord& r) {
    json j = {{"schema_version", kAuditSchemaVersion},
              {"request_id", r.request_id},
              {"timestamp", iso8601(r.timestamp)},
              {"safety", r.safety ? json(to_string(*r.safety)) : json(nullptr)},
              {"categories", std::vector<std::string>(r.categories.begin(), r.categories.end())},
              {"entity_count", r.entity_count},
              {"fallback_count", r.fallback_count},
              {"upstream_latency_ms", r.upstream_latency_ms ? json(*r.upstream_latency_ms) : json(nullptr)},
              {"outcome", to_string(r.outcome)},
              {"status", r.status}};
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

/// Appends one JSON line per record; appends are serialized.
class AuditLog {
public:
    explicit AuditLog(std::string path) : path_(std::move(path)) {
        if (!path_.empty()) {
            out_.open(path_, std::ios::app);
            if (!out_) throw ConfigError("cannot open audit log " + path_);
        }
    }

    void append(const AuditRecord& r) {
        const auto line = to_json(r).dump();
        std::lock_guard lock(mutex_);
        ++count_;
        if (out_.is_open()) {
            out_ << line << '\n';
            out_.flush();
        }
    }

    std::size_t count() const {
        std::lock_guard lock(mutex_);
        return count_;
    }

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    mutable std::mutex mutex_;
    std::size_t count_ = 0;
};

// --- collaborators ---------------------------------------------------------

class PromptDetector {
public:
    virtual ~PromptDetector() = default;
    virtual Verdict detect(std::string_view prompt) const = 0;
    virtual std::string mode() const = 0;
};

class PatternPromptDetector : public PromptDetector {
public:
    explicit PatternPromptDetector(const policy::PolicyCatalog& catalog) : detector_(catalog) {}
    Verdict detect(std::string_view prompt) const override { return detector_.detect(prompt); }
    std::string mode() const override { return "pattern"; }

private:
    detector::Detector detector_;
};

class RemotePromptDetector : public PromptDetector {
public:
    RemotePromptDetector(const policy::PolicyCatalog& catalog, dlms::ClientConfig config,
                         dlms::RemoteDetectorOptions options)
        : remote_(catalog, std::move(config), std::move(options)) {}
    Verdict detect(std::string_view prompt) const override { return remote_.detect(prompt); }
    std::string mode() const override { return "remote"; }

private:
    dlms::RemoteDetector remote_;
};

struct UpstreamResponse {
    int status = 0;
    std::string body;
    std::string content_type = "application/json";
};

class Upstream {
public:
    virtual ~Upstream() = default;
    virtual UpstreamResponse send(const std::string& body, const http::Headers& headers) = 0;
    virtual bool reachable() = 0;
};

class HttpUpstream : public Upstream {
public:
    HttpUpstream(http::Endpoint endpoint, std::string api_key, http::HttpOptions options)
        : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), options_(options) {}

    UpstreamResponse send(const std::string& body, const http::Headers& headers) override {
        http::Headers hs = headers;
        if (!api_key_.empty()) {
            std::erase_if(hs, [](const auto& h) { return text::ascii_lower(h.first) == "authorization"; });
            hs.emplace_back("Authorization", "Bearer " + api_key_);
        }
        const auto res = http::post(endpoint_, body, hs, options_);
        return {res.status, res.body, res.content_type.empty() ? "application/json" : res.content_type};
    }

    bool reachable() override { return http::reachable(endpoint_, options_.connect_timeout); }

private:
    http::Endpoint endpoint_;
    std::string api_key_;
    http::HttpOptions options_;
};

// --- gateway ---------------------------------------------------------------

struct ChatResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
    AuditRecord audit;
};

struct GatewayOptions {
    bool block_on_detector_failure = true;
    UnsafeAction unsafe_action = UnsafeAction::Sanitize;
};

inline std::string error_body(std::string_view type, std::string_view message) {
    return json{{"error", {{"type", type}, {"message", message}}}}.dump();
}

inline std::string new_request_id() { return "req-" + text::hex_encode(crypto::random_bytes(12)); }

class Gateway {
public:
    Gateway(policy::PolicyCatalog catalog, fpe::Ff3Key key, std::unique_ptr<PromptDetector> detector,
            std::unique_ptr<Upstream> upstream, std::unique_ptr<AuditLog> audit, GatewayOptions options = {},
            std::unique_ptr<anonymizer::MapStore> map_store = nullptr)
        : catalog_(std::move(catalog)),
          anonymizer_(catalog_, std::move(key)),
          detector_(std::move(detector)),
          upstream_(std::move(upstream)),
          audit_(std::move(audit)),
          options_(options),
          map_store_(std::move(map_store)) {}

    const policy::PolicyCatalog& catalog() const noexcept { return catalog_; }
    AuditLog& audit_log() noexcept { return *audit_; }

    ChatResponse handle_chat(const std::string& body, const http::Headers& client_headers = {}) {
        ChatResponse resp;
        auto& audit = resp.audit;
        audit.request_id = new_request_id();
        audit.timestamp = std::chrono::system_clock::now();
        auto finish = [&](int status, std::string out, Outcome outcome, std::string detail = {}) {
            resp.status = status;
            resp.body = std::move(out);
            audit.outcome = outcome;
            audit.status = status;
            audit.detail = std::move(detail);
            audit_->append(audit);
            return resp;
        };

        json request;
        std::size_t last = 0;
        try {
            request = json::parse(body);
            const auto& msgs = request.at("messages");
            if (!msgs.is_array() || msgs.empty()) throw SchemaError("'messages' must be a non-empty array");
            last = msgs.size() - 1;
            if (msgs[last].at("role") != "user") throw SchemaError("the last message must have role 'user'");
            if (!msgs[last].at("content").is_string()) throw SchemaError("message content must be a string");
        } catch (const std::exception& e) {
            return finish(400, error_body("invalid_request_error", e.what()), Outcome::Error, "invalid_request");
        }
        const auto prompt = request["messages"][last]["content"].get<std::string>();

        // Step 2: detection.
        Verdict verdict;
        try {
            verdict = detector_->detect(prompt);
        } catch (const Error& e) {
            if (options_.block_on_detector_failure)
                return finish(503,
                              error_body("detector_unavailable",
                                         "the privacy detector is unavailable; the request was not forwarded"),
                              Outcome::Blocked, "detector_unavailable");
            auto up = forward(body, client_headers, resp);
            if (!up) return resp;
            return finish(up->status, up->body, Outcome::Error, "detector_unavailable_fail_open");
        }
        audit.safety = verdict.safety;
        audit.categories = verdict.categories;
        audit.entity_count = verdict.entities.size();

        // Safe: the client's bytes go upstream unchanged and the reply comes back unchanged.
        if (verdict.safety == Safety::Safe) {
            auto up = forward(body, client_headers, resp);
            if (!up) return resp;
            resp.content_type = up->content_type;
            const bool ok = up->status >= 200 && up->status < 300;
            return finish(up->status, up->body, ok ? Outcome::Forwarded : Outcome::Error,
                          ok ? "" : "upstream_status");
        }

        if (options_.unsafe_action == UnsafeAction::Block)
            return finish(403,
                          error_body("privacy_policy_violation",
                                     "the prompt contains sensitive data and was blocked by policy"),
                          Outcome::Blocked, "unsafe_blocked");

        // Step 3: anonymize, then apply the same map to every message so that
        // repeated entities in earlier turns do not leak.
        anonymizer::AnonymizeResult anon;
        try {
            anon = anonymizer_.anonymize(prompt, verdict, audit.request_id);
        } catch (const Error& e) {
            return finish(500, error_body("internal_error", "anonymization failed"), Outcome::Error,
                          "anonymization_failed");
        }
        audit.fallback_count = anon.map.fallback_count();
        auto& msgs = request["messages"];
        for (std::size_t i = 0; i < msgs.size(); ++i) {
            if (!msgs[i].is_object() || !msgs[i].contains("content") || !msgs[i]["content"].is_string()) continue;
            msgs[i]["content"] = i == last ? anon.sanitized : mask(msgs[i]["content"].get<std::string>(), anon.map);
        }

        // Steps 4-6: forward the sanitized request and restore the reply.
        auto up = forward(request.dump(), client_headers, resp);
        if (!up) return resp;
        resp.content_type = up->content_type;
        if (up->status < 200 || up->status >= 300)
            return finish(up->status, up->body, Outcome::Error, "upstream_status");
        if (map_store_) map_store_->append(anon.map);
        return finish(up->status, restore_body(up->body, anon.map), Outcome::ForwardedSanitized);
    }

    json health() {
        const bool up = upstream_->reachable();
        return {{"status", up ? "ok" : "degraded"},
                {"catalog_version", catalog_.version},
                {"detector_mode", detector_->mode()},
                {"upstream_reachable", up}};
    }

    /// Replaces each plaintext of the map with its ciphertext.
    static std::string mask(std::string text, const anonymizer::EntityMap& map) {
        for (const auto& r : map.records)
            for (auto pos = text.find(r.plaintext); pos != std::string::npos;
                 pos = text.find(r.plaintext, pos + r.ciphertext.size()))
                text.replace(pos, r.plaintext.size(), r.ciphertext);
        return text;
    }

    /// Restores choices[*].message.content of a JSON reply; a non-JSON reply
    /// is restored as plain text.
    static std::string restore_body(const std::string& body, const anonymizer::EntityMap& map) {
        json reply;
        try {
            reply = json::parse(body);
        } catch (const json::exception&) {
            return anonymizer::restore(body, map);
        }
        bool changed = false;
        if (reply.is_object() && reply.contains("choices") && reply["choices"].is_array()) {
            for (auto& choice : reply["choices"]) {
                if (!choice.is_object() || !choice.contains("message")) continue;
                auto& msg = choice["message"];
                if (!msg.is_object() || !msg.contains("content") || !msg["content"].is_string()) continue;
                const auto before = msg["content"].get<std::string>();
                auto after = anonymizer::restore(before, map);
                if (after != before) {
                    msg["content"] = std::move(after);
                    changed = true;
                }
            }
        }
        return changed ? reply.dump() : body;
    }

private:
    // Sends to the upstream and records latency; on transport failure fills
    // resp with a 502 and audits it.
    std::optional<UpstreamResponse> forward(const std::string& body, const http::Headers& headers,
                                            ChatResponse& resp) {
        const auto started = std::chrono::steady_clock::now();
        try {
            auto r = upstream_->send(body, headers);
            resp.audit.upstream_latency_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
            return r;
        } catch (const TransportError& e) {
            resp.audit.upstream_latency_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
            const bool timeout = dynamic_cast<const TimeoutError*>(&e) != nullptr;
            resp.status = timeout ? 504 : 502;
            resp.body = error_body("upstream_unavailable", timeout ? "upstream timed out" : "upstream unreachable");
            resp.audit.outcome = Outcome::Error;
            resp.audit.status = resp.status;
            resp.audit.detail = timeout ? "upstream_timeout" : "upstream_transport";
            audit_->append(resp.audit);
            return std::nullopt;
        }
    }

    policy::PolicyCatalog catalog_;
    anonymizer::Anonymizer anonymizer_;
    std::unique_ptr<PromptDetector> detector_;
    std::unique_ptr<Upstream> upstream_;
    std::unique_ptr<AuditLog> audit_;
    GatewayOptions options_;
    std::unique_ptr<anonymizer::MapStore> map_store_;
};

/// Builds a gateway from configuration. Throws ConfigError for unusable
/// configuration and KeyError for a missing or malformed key.
inline std::unique_ptr<Gateway> build_gateway(const GatewayConfig& c) {
    auto catalog = load_catalog_source(c.catalog);
    auto key = load_key(c.key);
    http::HttpOptions hopts{std::chrono::milliseconds(c.connect_timeout_ms),
                            std::chrono::milliseconds(c.read_timeout_ms), c.retries};
    std::unique_ptr<PromptDetector> det;
    if (c.detector_mode == DetectorMode::BuiltinPattern) {
        try {
            det = std::make_unique<PatternPromptDetector>(catalog);
        } catch (const UnsupportedCategory& e) {
            throw ConfigError(std::string("pattern detector cannot serve this catalog: ") + e.what());
        }
    } else {
        dlms::ClientConfig cc;
        cc.endpoint = http::Endpoint::parse(c.dlms.endpoint);
        cc.model = c.dlms.model;
        cc.api_key = c.dlms.api_key;
        cc.http = hopts;
        dlms::RemoteDetectorOptions ro;
        ro.kind = c.dlms.template_kind == "sft"             ? dlms::PromptTemplateKind::sft()
                  : c.dlms.template_kind == "rft-zero-shot" ? dlms::PromptTemplateKind::rft_zero_shot()
                                                            : dlms::PromptTemplateKind::rft_few_shot();
        det = std::make_unique<RemotePromptDetector>(catalog, cc, ro);
    }
    auto upstream = std::make_unique<HttpUpstream>(http::Endpoint::parse(c.upstream_url), c.upstream_api_key, hopts);
    auto audit = std::make_unique<AuditLog>(c.audit_log);
    std::unique_ptr<anonymizer::MapStore> store;
    if (!c.map_store.empty()) store = std::make_unique<anonymizer::MapStore>(c.map_store, key);
    return std::make_unique<Gateway>(std::move(catalog), std::move(key), std::move(det), std::move(upstream),
                                     std::move(audit),
                                     GatewayOptions{c.block_on_detector_failure, c.unsafe_action}, std::move(store));
}

// --- HTTP server -----------------------------------------------------------

inline constexpr const char* kChatPath = "/v1/chat/completions";

inline void mount(httplib::Server& server, Gateway& gw) {
    server.Post(kChatPath, [&gw](const httplib::Request& req, httplib::Response& res) {
        http::Headers headers;
        if (req.has_header("Authorization")) headers.emplace_back("Authorization", req.get_header_value("Authorization"));
        auto out = gw.handle_chat(req.body, headers);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
        res.set_header("X-Privgate-Request-Id", out.audit.request_id);
    });
    server.Get("/health", [&gw](const httplib::Request&, httplib::Response& res) {
        res.set_content(gw.health().dump(), "application/json");
    });
}

/// Runs a server on a background thread; stops on destruction.
class BackgroundServer {
public:
    BackgroundServer(Gateway& gw, const std::string& host, int port = 0) {
        mount(server_, gw);
        port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (port_ < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~BackgroundServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    BackgroundServer(const BackgroundServer&) = delete;
    BackgroundServer& operator=(const BackgroundServer&) = delete;

    int port() const noexcept { return port_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace privgate::gateway
