#pragma once

// Sensitive-data taxonomy (T-codes) and free-text privacy policies (POL-codes)
// loaded from a single JSON catalog. A catalog is immutable after load.

#include "privgate/error.hpp"
#include "privgate/fpe/format.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace privgate::policy {

using nlohmann::json;

/// Per-category overrides for the built-in detector.
struct DetectorOverrides {
    std::optional<std::string> pattern;
    std::optional<std::vector<std::string>> cue_words;
    std::optional<int> cue_window;
    friend bool operator==(const DetectorOverrides&, const DetectorOverrides&) = default;
};

struct Category {
    std::string code;
    std::string name;
    std::string description;
    std::string fpe_profile;
    DetectorOverrides detector;
    friend bool operator==(const Category&, const Category&) = default;
};

struct PolicyRule {
    std::string code;
    std::string title;
    std::string body;
    friend bool operator==(const PolicyRule&, const PolicyRule&) = default;
};

struct ProfileClassDef {
    std::string name;
    std::string alphabet;
    friend bool operator==(const ProfileClassDef&, const ProfileClassDef&) = default;
};

struct ProfileDef {
    std::string id;
    std::vector<ProfileClassDef> classes;
    friend bool operator==(const ProfileDef&, const ProfileDef&) = default;
};

struct PolicyCatalog {
    std::string version;
    std::vector<Category> categories;
    std::vector<PolicyRule> rules;
    std::vector<ProfileDef> profiles;

    const Category* find_category(std::string_view code) const {
        for (const auto& c : categories)
            if (c.code == code) return &c;
        return nullptr;
    }

    bool has_code(std::string_view code) const {
        if (find_category(code)) return true;
        for (const auto& r : rules)
            if (r.code == code) return true;
        return false;
    }

    std::vector<std::string> category_codes() const {
        std::vector<std::string> out;
        for (const auto& c : categories) out.push_back(c.code);
        return out;
    }

    /// Built-in profiles plus the catalog's custom ones.
    fpe::ProfileRegistry profile_registry() const {
        fpe::ProfileRegistry reg;
        for (const auto& def : profiles) {
            std::vector<fpe::CharClass> classes;
            for (const auto& c : def.classes) classes.push_back({c.name, fpe::Alphabet(c.alphabet)});
            reg.add(fpe::FormatProfile(def.id, std::move(classes)));
        }
        return reg;
    }

    friend bool operator==(const PolicyCatalog&, const PolicyCatalog&) = default;
};

/// Default FPE profile for the six taxonomy codes; anything else is digits.
inline std::string default_profile_for(std::string_view code) {
    if (code == "T1") return "email";
    if (code == "T2") return "alnum";
    return "digits";
}

namespace detail {

inline std::string require_string(const json& obj, const char* field, const std::string& where) {
    if (!obj.is_object() || !obj.contains(field) || !obj.at(field).is_string())
        throw SchemaError(where + ": field '" + field + "' must be a string");
    return obj.at(field).get<std::string>();
}

inline void require_single_line(const std::string& value, const std::string& where) {
    if (value.find('\n') != std::string::npos || value.find('\r') != std::string::npos)
        throw SchemaError(where + " must not contain line breaks");
}

}  // namespace detail

inline PolicyCatalog load_catalog(const json& doc) {
    if (!doc.is_object()) throw SchemaError("catalog must be a JSON object");
    PolicyCatalog cat;
    if (doc.contains("version")) {
        if (!doc["version"].is_string()) throw SchemaError("'version' must be a string");
        cat.version = doc["version"].get<std::string>();
    }
    for (const char* key : {"categories", "rules", "profiles"})
        if (doc.contains(key) && !doc[key].is_array())
            throw SchemaError(std::string("'") + key + "' must be an array");

    if (doc.contains("profiles")) {
        for (const auto& p : doc["profiles"]) {
            ProfileDef def;
            def.id = detail::require_string(p, "id", "profile");
            if (!p.contains("classes") || !p["classes"].is_array() || p["classes"].empty())
                throw SchemaError("profile '" + def.id + "': 'classes' must be a non-empty array");
            for (const auto& c : p["classes"])
                def.classes.push_back({detail::require_string(c, "name", "profile class"),
                                       detail::require_string(c, "alphabet", "profile class")});
            cat.profiles.push_back(std::move(def));
        }
    }

    fpe::ProfileRegistry registry;
    try {
        registry = cat.profile_registry();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("invalid profile: ") + e.what());
    }

    static const std::regex kCategoryCode("^T[0-9]+$");
    static const std::regex kRuleCode("^POL[0-9]+$");
    std::set<std::string> seen;

    if (doc.contains("categories")) {
        for (const auto& c : doc["categories"]) {
            Category category;
            category.code = detail::require_string(c, "code", "category");
            const auto where = "category " + category.code;
            if (!std::regex_match(category.code, kCategoryCode))
                throw SchemaError(where + ": code must match ^T[0-9]+$");
            category.name = detail::require_string(c, "name", where);
            category.description = detail::require_string(c, "description", where);
            if (category.name.empty()) throw SchemaError(where + ": name is empty");
            if (category.description.empty()) throw SchemaError(where + ": description is empty");
            detail::require_single_line(category.name, where + " name");
            detail::require_single_line(category.description, where + " description");
            category.fpe_profile = c.contains("fpe_profile")
                                       ? detail::require_string(c, "fpe_profile", where)
                                       : default_profile_for(category.code);
            if (!registry.contains(category.fpe_profile))
                throw SchemaError(where + ": unknown fpe_profile '" + category.fpe_profile + "'");
            if (c.contains("pattern")) {
                category.detector.pattern = detail::require_string(c, "pattern", where);
                try {
                    std::regex probe(*category.detector.pattern);
                } catch (const std::regex_error& e) {
                    throw SchemaError(where + ": invalid pattern: " + e.what());
                }
            }
            if (c.contains("cue_words")) {
                if (!c["cue_words"].is_array()) throw SchemaError(where + ": cue_words must be an array");
                std::vector<std::string> words;
                for (const auto& w : c["cue_words"]) {
                    if (!w.is_string()) throw SchemaError(where + ": cue_words must hold strings");
                    words.push_back(w.get<std::string>());
                }
                category.detector.cue_words = std::move(words);
            }
            if (c.contains("cue_window")) {
                if (!c["cue_window"].is_number_integer() || c["cue_window"].get<int>() < 0)
                    throw SchemaError(where + ": cue_window must be a non-negative integer");
                category.detector.cue_window = c["cue_window"].get<int>();
            }
            if (!seen.insert(category.code).second)
                throw DuplicateCode("duplicate category code " + category.code);
            cat.categories.push_back(std::move(category));
        }
    }

    if (doc.contains("rules")) {
        for (const auto& r : doc["rules"]) {
            PolicyRule rule;
            rule.code = detail::require_string(r, "code", "rule");
            const auto where = "rule " + rule.code;
            if (!std::regex_match(rule.code, kRuleCode))
                throw SchemaError(where + ": code must match ^POL[0-9]+$");
            rule.title = detail::require_string(r, "title", where);
            rule.body = detail::require_string(r, "body", where);
            if (rule.title.empty()) throw SchemaError(where + ": title is empty");
            if (rule.body.empty()) throw SchemaError(where + ": body is empty");
            detail::require_single_line(rule.title, where + " title");
            detail::require_single_line(rule.body, where + " body");
            if (!seen.insert(rule.code).second) throw DuplicateCode("duplicate rule code " + rule.code);
            cat.rules.push_back(std::move(rule));
        }
    }

    if (cat.categories.empty() && cat.rules.empty())
        throw EmptyCatalog("catalog defines no categories and no rules");
    return cat;
}

inline PolicyCatalog load_catalog_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("catalog is not valid JSON: ") + e.what());
    }
    return load_catalog(doc);
}

inline PolicyCatalog load_catalog_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open catalog file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_catalog_text(ss.str());
}

inline json to_json(const PolicyCatalog& cat) {
    json doc = {{"version", cat.version}, {"categories", json::array()}, {"rules", json::array()}};
    for (const auto& c : cat.categories) {
        json j = {{"code", c.code},
                  {"name", c.name},
                  {"description", c.description},
                  {"fpe_profile", c.fpe_profile}};
        if (c.detector.pattern) j["pattern"] = *c.detector.pattern;
        if (c.detector.cue_words) j["cue_words"] = *c.detector.cue_words;
        if (c.detector.cue_window) j["cue_window"] = *c.detector.cue_window;
        doc["categories"].push_back(std::move(j));
    }
    for (const auto& r : cat.rules)
        doc["rules"].push_back({{"code", r.code}, {"title", r.title}, {"body", r.body}});
    if (!cat.profiles.empty()) {
        doc["profiles"] = json::array();
        for (const auto& p : cat.profiles) {
            json classes = json::array();
            for (const auto& c : p.classes) classes.push_back({{"name", c.name}, {"alphabet", c.alphabet}});
            doc["profiles"].push_back({{"id", p.id}, {"classes", std::move(classes)}});
        }
    }
    return doc;
}

/// Text substituted for the `{{ unsafe_categories }}` placeholder: one
/// "<code>: <name>." line followed by the description per entry, entries
/// separated by a blank line, categories before rules.
inline std::string render_category_block(const PolicyCatalog& cat) {
    std::string out;
    auto append = [&out](const std::string& code, const std::string& head, const std::string& body) {
        if (!out.empty()) out += "\n\n";
        out += code;
        out += ": ";
        out += head;
        out += ".\n";
        out += body;
    };
    for (const auto& c : cat.categories) append(c.code, c.name, c.description);
    for (const auto& r : cat.rules) append(r.code, r.title, r.body);
    return out;
}

inline constexpr std::string_view kTaxonomyJson = R"json({
  "version": "taxonomy-1",
  "categories": [
    {"code": "T1", "name": "Email Address", "description": "Users should not include email addresses in either user's prompts or input data.", "fpe_profile": "email"},
    {"code": "T2", "name": "Personal ID Number", "description": "Users should not include personal ID numbers in either user's prompts or input data.", "fpe_profile": "alnum"},
    {"code": "T3", "name": "Phone Number", "description": "Users should not include phone numbers in either user's prompts or input data.", "fpe_profile": "digits"},
    {"code": "T4", "name": "Fax Number", "description": "Users should not include fax numbers in either user's prompts or input data.", "fpe_profile": "digits"},
    {"code": "T5", "name": "Bank Account Number", "description": "Users should not include bank account numbers in either user's prompts or input data.", "fpe_profile": "digits"},
    {"code": "T6", "name": "Monetary Value", "description": "Users should not include monetary values in either user's prompts or input data.", "fpe_profile": "digits"}
  ],
  "rules": []
})json";

inline constexpr std::string_view kPoliciesJson = R"json({
  "version": "policies-1",
  "categories": [],
  "rules": [
    {"code": "POL01", "title": "Security Policy of Company's Secret Information", "body": "Secret information is information of sensitive nature or having strategic values. The unauthorized disclosure, modification, or destruction of this information would have a high impact on the company. Generally, this information shall be used exclusively by a small number of predetermined and authorized employees and business partners. Examples include passwords and cryptographic keys. The following usages are not permitted: Disseminating sensitive or confidential information of Company."},
    {"code": "POL02", "title": "Security Policy of Company's Customer Information", "body": "Customer information is limited to a specific group of business partners, assigned on a need-to-use basis and for authorized intended purposes. The unauthorized disclosure, modification, or destruction of this information would adversely affect business performance or the continuity of operations. Examples include personal names, phone numbers, and physical addresses in support tickets and purchases."},
    {"code": "POL03", "title": "Security Policy of Company's Employee Personal Information", "body": "Employee personal information is limited to a specific group of staff, assigned on a need-to-use basis and for authorized intended purposes. The unauthorized disclosure, modification, or destruction of this information would adversely affect business performance or the continuity of operations. Examples include employees' or job applicants' personal information, such as Hong Kong ID numbers, email addresses, phone numbers, dates of birth, and home addresses. You are not allowed to make any unauthorized disclosure of the confidential information about Company's employees and job applicants."},
    {"code": "POL04", "title": "Security Policy of Company's Payment Information", "body": "Payment information is limited to payment and transaction scenarios, assigned on a need-to-use basis and for authorized intended purposes. The unauthorized disclosure, modification, or destruction of this information would adversely affect business performance or the continuity of operations. Examples include bank account and credit card information."}
  ]
})json";

/// The six-category taxonomy (email, personal ID, phone, fax, bank account, money).
inline const PolicyCatalog& builtin_taxonomy() {
    static const PolicyCatalog cat = load_catalog_text(kTaxonomyJson);
    return cat;
}

/// The four free-text company policies POL01..POL04.
inline const PolicyCatalog& builtin_policies() {
    static const PolicyCatalog cat = load_catalog_text(kPoliciesJson);
    return cat;
}

}  // namespace privgate::policy
