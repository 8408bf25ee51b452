#pragma once

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace privgate {

enum class Safety { Safe, Unsafe };

inline std::string_view to_string(Safety s) { return s == Safety::Safe ? "safe" : "unsafe"; }

inline std::optional<Safety> parse_safety(std::string_view s) {
    if (s == "safe") return Safety::Safe;
    if (s == "unsafe") return Safety::Unsafe;
    return std::nullopt;
}

/// Orders category codes by prefix, then numeric suffix length, then text
/// ("T2" < "T10" < "POL01").
struct CodeLess {
    bool operator()(const std::string& a, const std::string& b) const {
        auto split = [](const std::string& s) {
            std::size_t i = 0;
            while (i < s.size() && !(s[i] >= '0' && s[i] <= '9')) ++i;
            return std::pair<std::string_view, std::string_view>{std::string_view(s).substr(0, i),
                                                                 std::string_view(s).substr(i)};
        };
        const auto [pa, na] = split(a);
        const auto [pb, nb] = split(b);
        if (pa != pb) return pa < pb;
        if (na.size() != nb.size()) return na.size() < nb.size();
        return na < nb;
    }
};

using CodeSet = std::set<std::string, CodeLess>;

/// A verbatim substring of a prompt; [start, end) are UTF-8 byte offsets.
struct Entity {
    std::string category_code;
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;
    friend bool operator==(const Entity&, const Entity&) = default;
};

struct Verdict {
    Safety safety = Safety::Safe;
    CodeSet categories;
    std::vector<Entity> entities;

    static Verdict from_entities(std::vector<Entity> entities) {
        Verdict v;
        for (const auto& e : entities) v.categories.insert(e.category_code);
        v.entities = std::move(entities);
        v.safety = v.entities.empty() ? Safety::Safe : Safety::Unsafe;
        return v;
    }

    /// Safe <=> no categories <=> no entities; every entity's code listed and vice versa.
    bool consistent() const {
        if ((safety == Safety::Safe) != categories.empty()) return false;
        if (categories.empty() != entities.empty()) return false;
        CodeSet seen;
        for (const auto& e : entities) {
            if (!categories.contains(e.category_code)) return false;
            seen.insert(e.category_code);
        }
        return seen == categories;
    }
};

inline nlohmann::json to_json(const Verdict& v) {
    nlohmann::json entities = nlohmann::json::array();
    for (const auto& e : v.entities)
        entities.push_back({{"category", e.category_code},
                            {"text", e.text},
                            {"start", e.start},
                            {"end", e.end}});
    return {{"safety", to_string(v.safety)},
            {"categories", std::vector<std::string>(v.categories.begin(), v.categories.end())},
            {"entities", std::move(entities)}};
}

}  // namespace privgate
