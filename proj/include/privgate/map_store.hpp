#pragma once

// Append-only JSONL persistence of entity maps for multi-turn sessions.
// Plaintexts are sealed with AES-256-GCM under a subkey derived from the
// service key; nothing else in a line is secret.

#include "privgate/anonymizer.hpp"
#include "privgate/crypto.hpp"
#include "privgate/text.hpp"

#include <json.hpp>

#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <string>

namespace privgate::anonymizer {

class MapStore {
public:
    MapStore(std::string path, const fpe::Ff3Key& service_key)
        : path_(std::move(path)), subkey_(crypto::hmac_sha256(service_key.bytes(), "privgate entity-map v1")) {}

    void append(const EntityMap& map) {
        nlohmann::json records = nlohmann::json::array();
        for (const auto& r : map.records) {
            records.push_back({{"ciphertext", r.ciphertext},
                               {"category", r.category_code},
                               {"tweak", r.tweak.hex()},
                               {"key_id", r.key_id},
                               {"fallback", r.fallback},
                               {"plaintext_sealed", text::hex_encode(crypto::seal(subkey_, r.plaintext))}});
        }
        const auto created = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 map.created_at.time_since_epoch())
                                 .count();
        const nlohmann::json line = {{"request_id", map.request_id}, {"created_at_ms", created}, {"records", records}};
        std::unique_lock lock(mutex_);
        std::ofstream out(path_, std::ios::app);
        if (!out) throw Error("cannot open entity map store " + path_);
        out << line.dump() << '\n';
    }

    /// All records stored under request_id, oldest first; empty map when absent.
    EntityMap load(const std::string& request_id) const {
        EntityMap map;
        map.request_id = request_id;
        std::shared_lock lock(mutex_);
        std::ifstream in(path_);
        std::string line;
        while (std::getline(in, line)) {
            if (text::trim(line).empty()) continue;
            const auto j = nlohmann::json::parse(line);
            if (j.at("request_id") != request_id) continue;
            if (map.records.empty())
                map.created_at = std::chrono::system_clock::time_point(
                    std::chrono::milliseconds(j.at("created_at_ms").get<long long>()));
            for (const auto& r : j.at("records")) {
                EntityRecord rec;
                rec.ciphertext = r.at("ciphertext").get<std::string>();
                rec.category_code = r.at("category").get<std::string>();
                rec.tweak = fpe::Tweak::from_hex(r.at("tweak").get<std::string>());
                rec.key_id = r.at("key_id").get<std::string>();
                rec.fallback = r.at("fallback").get<bool>();
                rec.plaintext = crypto::open(subkey_, text::hex_decode(r.at("plaintext_sealed").get<std::string>()));
                map.records.push_back(std::move(rec));
            }
        }
        return map;
    }

private:
    std::string path_;
    std::array<std::uint8_t, 32> subkey_;
    mutable std::shared_mutex mutex_;
};

}  // namespace privgate::anonymizer
