#pragma once

// Chat-completion client for a remote detector model, and a detector that
// turns its answers into span-level verdicts.

#include "privgate/detector.hpp"
#include "privgate/dlms_parse.hpp"
#include "privgate/dlms_prompt.hpp"
#include "privgate/http.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace privgate::dlms {

struct DecodingParams {
    double temperature = 0.7;
};

struct ClientConfig {
    http::Endpoint endpoint;
    std::string model = "dlms";
    std::string api_key;  // sent as a bearer token when non-empty
    DecodingParams params;
    http::HttpOptions http;
};

/// Extracts choices[0].message.content from a chat-completion response body.
inline std::string extract_content(int status, const std::string& body) {
    try {
        const auto j = nlohmann::json::parse(body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw UpstreamError(status, body);
    }
}

inline nlohmann::json chat_request(const std::string& model, const std::string& prompt,
                                   const DecodingParams& params) {
    return {{"model", model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", params.temperature}};
}

class ChatClient {
public:
    explicit ChatClient(ClientConfig config) : config_(std::move(config)) {}

    const ClientConfig& config() const noexcept { return config_; }

    std::string complete(const std::string& prompt) const {
        return complete(prompt, config_.params);
    }

    std::string complete(const std::string& prompt, const DecodingParams& params) const {
        http::Headers headers;
        if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
        const auto res = http::post(config_.endpoint, chat_request(config_.model, prompt, params).dump(),
                                    headers, config_.http);
        if (res.status < 200 || res.status >= 300) throw UpstreamError(res.status, res.body);
        return extract_content(res.status, res.body);
    }

private:
    ClientConfig config_;
};

inline std::string query_model(const http::Endpoint& endpoint, const std::string& prompt,
                               const DecodingParams& params = {}) {
    ClientConfig cfg;
    cfg.endpoint = endpoint;
    cfg.params = params;
    return ChatClient(cfg).complete(prompt);
}

struct RemoteDetectorOptions {
    PromptTemplateKind kind = PromptTemplateKind::sft();
    std::string role = "User";
    RftParseOptions rft;
    bool require_valid_format = true;  // reject RFT outputs whose tag structure is invalid
};

/// Locates model-reported entity strings in the prompt. Every non-overlapping
/// occurrence becomes a span; longer strings claim positions first.
inline std::vector<Entity> locate_entities(std::string_view prompt, const ParsedAnswer& answer,
                                           const std::function<std::string(const std::string&)>& category_of) {
    std::vector<std::string> by_length(answer.entities);
    std::stable_sort(by_length.begin(), by_length.end(),
                     [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    std::vector<Entity> found;
    auto overlaps = [&found](std::size_t s, std::size_t e) {
        return std::any_of(found.begin(), found.end(),
                           [&](const Entity& x) { return s < x.end && x.start < e; });
    };
    for (const auto& text : by_length) {
        const auto code = category_of(text);
        for (auto pos = prompt.find(text); pos != std::string_view::npos; pos = prompt.find(text, pos + 1)) {
            if (overlaps(pos, pos + text.size())) continue;
            found.push_back({code, text, pos, pos + text.size()});
        }
    }
    std::sort(found.begin(), found.end(), [](const Entity& a, const Entity& b) { return a.start < b.start; });
    return found;
}

class RemoteDetector {
public:
    RemoteDetector(const policy::PolicyCatalog& catalog, ClientConfig config, RemoteDetectorOptions options = {})
        : catalog_(catalog), client_(std::move(config)), options_(std::move(options)) {
        try {
            patterns_.emplace(catalog_);
        } catch (const UnsupportedCategory&) {
            // Free-text policy catalogs have no pattern rules; categories then
            // come from the model alone.
        }
    }

    ParsedAnswer ask(std::string_view message) const {
        const auto prompt = build_prompt(message, catalog_, options_.kind, options_.role);
        std::string raw;
        try {
            raw = client_.complete(prompt);
        } catch (const TransportError& e) {
            throw DetectorUnavailable(std::string("detector model unreachable: ") + e.what());
        } catch (const UpstreamError& e) {
            throw DetectorUnavailable("detector model returned status " + std::to_string(e.status()));
        }
        if (!options_.kind.is_rft()) {
            try {
                return parse_sft_output(raw, &catalog_);
            } catch (const MalformedOutput& e) {
                throw DetectorUnavailable(std::string("unusable detector output: ") + e.what());
            }
        }
        const auto out = parse_rft_output(raw, options_.rft, &catalog_);
        if (options_.require_valid_format && !out.format_valid)
            throw DetectorUnavailable("unusable detector output: " + out.format_error);
        if (!out.answer) throw DetectorUnavailable("unusable detector output: " + out.answer_error);
        return *out.answer;
    }

    Verdict detect(std::string_view message) const {
        const auto answer = ask(message);
        Verdict v;
        v.safety = answer.safety;
        if (answer.safety == Safety::Safe) return v;
        v.categories = answer.categories;
        v.entities = locate_entities(message, answer,
                                     [&](const std::string& text) { return category_of(text, answer.categories); });
        return v;
    }

private:
    // The answer grammar does not tie entities to codes; a single predicted
    // code wins outright, otherwise the first code whose patterns cover the
    // whole entity, otherwise the first predicted code.
    std::string category_of(const std::string& entity, const CodeSet& predicted) const {
        if (predicted.empty()) return "UNKNOWN";
        if (predicted.size() == 1 || !patterns_) return *predicted.begin();
        for (const auto& code : predicted) {
            if (!catalog_.find_category(code)) continue;
            for (const auto& e : patterns_->match_category(entity, code))
                if (e.start == 0 && e.end == entity.size()) return code;
        }
        return *predicted.begin();
    }

    const policy::PolicyCatalog& catalog_;
    ChatClient client_;
    RemoteDetectorOptions options_;
    std::optional<detector::Detector> patterns_;
};

}  // namespace privgate::dlms
