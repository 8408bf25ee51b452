#pragma once

// Sensitive data anonymizer: replaces detected entities with format-preserving
// ciphertexts, records a reversible per-request map, and restores plaintext
// in upstream responses by exact matching against that map.

#include "privgate/crypto.hpp"
#include "privgate/error.hpp"
#include "privgate/fpe/format.hpp"
#include "privgate/policy.hpp"
#include "privgate/verdict.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace privgate::anonymizer {

struct EntityRecord {
    std::string plaintext;
    std::string ciphertext;
    std::string category_code;
    fpe::Tweak tweak;
    std::string key_id;
    bool fallback = false;  // placeholder instead of FPE
};

struct EntityMap {
    std::string request_id;
    std::vector<EntityRecord> records;
    std::chrono::system_clock::time_point created_at;

    std::size_t fallback_count() const {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [](const EntityRecord& r) { return r.fallback; }));
    }
};

struct AnonymizeResult {
    std::string sanitized;
    EntityMap map;
};

/// 7-byte tweak: truncated SHA-256 over request id, category code and ordinal.
inline fpe::Tweak derive_tweak(std::string_view request_id, std::string_view category_code,
                               std::size_t ordinal) {
    std::string material;
    material.append(request_id).push_back('\x1f');
    material.append(category_code).push_back('\x1f');
    material.append(std::to_string(ordinal));
    const auto digest = crypto::sha256(material);
    return fpe::Tweak::from_bytes(std::span(digest).first(7));
}

/// Placeholder token used when an entity cannot be format-preserving encrypted.
inline std::string placeholder(std::string_view category_code, std::size_t n) {
    return "⟦" + std::string(category_code) + "#" + std::to_string(n) + "⟧";
}

struct AnonymizerOptions {
    std::size_t max_retries = 8;
};

class Anonymizer {
public:
    Anonymizer(const policy::PolicyCatalog& catalog, fpe::Ff3Key key, AnonymizerOptions options = {})
        : registry_(catalog.profile_registry()), key_(std::move(key)), options_(options) {
        for (const auto& c : catalog.categories) profile_of_.emplace(c.code, c.fpe_profile);
    }

    const fpe::Ff3Key& key() const noexcept { return key_; }

    const fpe::FormatProfile& profile_for(const std::string& code) const {
        const auto it = profile_of_.find(code);
        return registry_.get(it != profile_of_.end() ? it->second : policy::default_profile_for(code));
    }

    AnonymizeResult anonymize(std::string_view prompt, const Verdict& verdict,
                              const std::string& request_id) const {
        AnonymizeResult result;
        result.map.request_id = request_id;
        result.map.created_at = std::chrono::system_clock::now();

        std::vector<const Entity*> order;
        for (const auto& e : verdict.entities) {
            if (e.start >= e.end || e.end > prompt.size() ||
                prompt.substr(e.start, e.end - e.start) != e.text)
                throw SpanMismatch("entity span [" + std::to_string(e.start) + ", " +
                                   std::to_string(e.end) + ") does not hold '" + e.text + "'");
            order.push_back(&e);
        }
        std::sort(order.begin(), order.end(), [](const Entity* a, const Entity* b) { return a->start < b->start; });
        for (std::size_t i = 1; i < order.size(); ++i)
            if (order[i]->start < order[i - 1]->end) throw SpanMismatch("entity spans overlap");

        std::size_t next_ordinal = order.size();
        std::map<std::string, std::size_t> placeholders_used;
        auto& records = result.map.records;

        for (std::size_t i = 0; i < order.size(); ++i) {
            const Entity& e = *order[i];
            EntityRecord rec{e.text, {}, e.category_code, {}, key_.key_id(), false};
            const auto& profile = profile_for(e.category_code);
            std::size_t ordinal = i;
            for (std::size_t attempt = 0; attempt <= options_.max_retries; ++attempt) {
                const auto tweak = derive_tweak(request_id, e.category_code, ordinal);
                std::string candidate;
                try {
                    candidate = fpe::encrypt_preserving(e.text, profile, key_, tweak);
                } catch (const FpeError&) {
                    break;
                }
                if (usable(candidate, prompt, verdict, records, e.text)) {
                    rec.ciphertext = std::move(candidate);
                    rec.tweak = tweak;
                    break;
                }
                ordinal = next_ordinal++;
            }
            if (rec.ciphertext.empty()) {
                rec.fallback = true;
                auto& n = placeholders_used[e.category_code];
                do {
                    rec.ciphertext = placeholder(e.category_code, ++n);
                } while (!usable(rec.ciphertext, prompt, verdict, records, e.text));
            }
            records.push_back(std::move(rec));
        }

        std::string out(prompt);
        for (std::size_t i = order.size(); i-- > 0;)
            out.replace(order[i]->start, order[i]->end - order[i]->start, records[i].ciphertext);

        // A plaintext can survive outside its own span when the same string
        // also appears undetected elsewhere; those copies are rewritten too.
        for (const auto& rec : records) {
            for (auto pos = out.find(rec.plaintext); pos != std::string::npos;
                 pos = out.find(rec.plaintext, pos + rec.ciphertext.size()))
                out.replace(pos, rec.plaintext.size(), rec.ciphertext);
        }
        result.sanitized = std::move(out);
        return result;
    }

private:
    static bool usable(const std::string& candidate, std::string_view prompt, const Verdict& verdict,
                       const std::vector<EntityRecord>& records, const std::string& plaintext) {
        if (candidate == plaintext) return false;
        if (prompt.find(candidate) != std::string_view::npos) return false;
        for (const auto& r : records)
            if (r.ciphertext.find(candidate) != std::string::npos ||
                candidate.find(r.ciphertext) != std::string::npos)
                return false;
        for (const auto& e : verdict.entities)
            if (candidate.find(e.text) != std::string::npos) return false;
        return true;
    }

    fpe::ProfileRegistry registry_;
    std::map<std::string, std::string> profile_of_;
    fpe::Ff3Key key_;
    AnonymizerOptions options_;
};

/// Replaces every occurrence of each record's ciphertext with its plaintext,
/// scanning once, left to right, longest ciphertext first at each position.
/// Returns the input unchanged when nothing matches.
inline std::string restore(std::string_view response, const EntityMap& map) {
    std::vector<const EntityRecord*> recs;
    for (const auto& r : map.records)
        if (!r.ciphertext.empty()) recs.push_back(&r);
    std::stable_sort(recs.begin(), recs.end(), [](const EntityRecord* a, const EntityRecord* b) {
        return a->ciphertext.size() > b->ciphertext.size();
    });
    std::string out;
    out.reserve(response.size());
    std::size_t i = 0;
    while (i < response.size()) {
        const EntityRecord* hit = nullptr;
        for (const auto* r : recs) {
            if (response.compare(i, r->ciphertext.size(), r->ciphertext) == 0) {
                hit = r;
                break;
            }
        }
        if (hit) {
            out += hit->plaintext;
            i += hit->ciphertext.size();
        } else {
            out.push_back(response[i++]);
        }
    }
    return out;
}

}  // namespace privgate::anonymizer
