#pragma once

// Rule-based reward for analyze/answer outputs, with curriculum stages.

#include "privgate/dlms_parse.hpp"
#include "privgate/error.hpp"
#include "privgate/verdict.hpp"

#include <json.hpp>

#include <algorithm>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace privgate::reward {

using nlohmann::json;
using EntitySet = std::set<std::string>;

struct GroundTruth {
    Safety safety = Safety::Safe;
    CodeSet categories;
    EntitySet entities;

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

namespace detail {

inline std::vector<std::string> string_list(const json& v, char sep) {
    std::vector<std::string> out;
    if (v.is_null()) return out;
    if (v.is_string()) {
        const auto& whole = v.get_ref<const std::string&>();
        for (const auto item : text::split(whole, sep)) {
            const auto t = text::trim(item);
            if (!t.empty()) out.emplace_back(t);
        }
        return out;
    }
    if (!v.is_array()) throw SchemaError("expected a string or an array of strings");
    for (const auto& item : v) {
        if (!item.is_string()) throw SchemaError("expected an array of strings");
        const auto t = text::trim(item.get_ref<const std::string&>());
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

}  // namespace detail

/// Accepts categories as an array (or comma-joined string) and entities as a
/// "; "-joined string (or an array).
inline GroundTruth ground_truth_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("ground_truth must be an object");
    GroundTruth gt;
    const auto s = j.contains("safety") && j["safety"].is_string()
                       ? parse_safety(text::ascii_lower(j["safety"].get<std::string>()))
                       : std::nullopt;
    if (!s) throw SchemaError("ground_truth.safety must be 'safe' or 'unsafe'");
    gt.safety = *s;
    for (auto& c : detail::string_list(j.value("categories", json()), ','))
        gt.categories.insert(text::ascii_upper(c));
    for (auto& e : detail::string_list(j.value("entities", json()), ';')) gt.entities.insert(std::move(e));
    if (gt.safety == Safety::Safe && (!gt.categories.empty() || !gt.entities.empty()))
        throw SchemaError("safe ground truth must have no categories or entities");
    return gt;
}

inline std::string join_entities(const std::vector<std::string>& entities) {
    std::string out;
    for (std::size_t i = 0; i < entities.size(); ++i) {
        if (i) out += "; ";
        out += entities[i];
    }
    return out;
}

inline json to_json(const GroundTruth& gt, const std::vector<std::string>& entity_order = {}) {
    std::vector<std::string> entities = entity_order;
    if (entities.empty()) entities.assign(gt.entities.begin(), gt.entities.end());
    return {{"safety", to_string(gt.safety)},
            {"categories", std::vector<std::string>(gt.categories.begin(), gt.categories.end())},
            {"entities", join_entities(entities)}};
}

enum class Mode { Full, Stage1, Stage2, Stage3 };

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::Full: return "full";
        case Mode::Stage1: return "stage1";
        case Mode::Stage2: return "stage2";
        case Mode::Stage3: return "stage3";
    }
    return "full";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
    if (s == "full") return Mode::Full;
    if (s == "stage1") return Mode::Stage1;
    if (s == "stage2") return Mode::Stage2;
    if (s == "stage3") return Mode::Stage3;
    return std::nullopt;
}

struct RewardBreakdown {
    int r_fmt = 0;
    int r_safety = 0;
    int r_cat = 0;
    int r_ent = 0;
    int r_total = 0;
    std::vector<std::string> components_active;

    friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

inline json to_json(const RewardBreakdown& r) {
    return {{"r_fmt", r.r_fmt},     {"r_safety", r.r_safety}, {"r_cat", r.r_cat},
            {"r_ent", r.r_ent},     {"r_total", r.r_total},   {"components_active", r.components_active}};
}

inline int score_format(bool valid, Mode mode) {
    if (valid) return 2;
    return mode == Mode::Stage1 ? 0 : -2;
}

inline int score_format(const dlms::ModelOutput& out, Mode mode) { return score_format(out.format_valid, mode); }

/// nullopt stands for an unknown (unparseable) prediction.
inline int score_safety(std::optional<Safety> predicted, const GroundTruth& truth) {
    return predicted && *predicted == truth.safety ? 1 : -1;
}

template <class Set>
inline bool proper_nonempty_subset(const Set& pred, const Set& gt) {
    return !pred.empty() && pred.size() < gt.size() &&
           std::includes(gt.begin(), gt.end(), pred.begin(), pred.end(), gt.key_comp());
}

inline int score_category(const CodeSet& predicted, const CodeSet& truth) {
    if (predicted == truth) return 2;
    return proper_nonempty_subset(predicted, truth) ? 1 : -1;
}

inline int score_entity(const EntitySet& predicted, const EntitySet& truth) {
    if (predicted == truth) return 4;
    return proper_nonempty_subset(predicted, truth) ? 2 : -1;
}

struct Prediction {
    std::optional<Safety> safety;
    CodeSet categories;
    EntitySet entities;
};

/// Reads the answer block: unparseable means unknown safety and empty sets.
inline Prediction prediction_of(const dlms::ModelOutput& out) {
    Prediction p;
    if (!out.answer) return p;
    p.safety = out.answer->safety;
    if (out.answer->safety == Safety::Unsafe) {
        p.categories = out.answer->categories;
        p.entities.insert(out.answer->entities.begin(), out.answer->entities.end());
    }
    return p;
}

inline RewardBreakdown score_total(const dlms::ModelOutput& out, const GroundTruth& truth, Mode mode) {
    const auto pred = prediction_of(out);
    RewardBreakdown r;
    r.r_fmt = score_format(out, mode);
    r.r_safety = score_safety(pred.safety, truth);
    r.components_active = {"fmt", "safety"};
    const bool cat = mode != Mode::Stage1;
    const bool ent = mode == Mode::Full || mode == Mode::Stage3;
    if (cat) {
        r.r_cat = score_category(pred.categories, truth.categories);
        r.components_active.push_back("cat");
    }
    if (ent) {
        r.r_ent = score_entity(pred.entities, truth.entities);
        r.components_active.push_back("ent");
    }
    r.r_total = r.r_fmt + r.r_safety + r.r_cat + r.r_ent;
    return r;
}

inline RewardBreakdown score_total(std::string_view raw_output, const GroundTruth& truth, Mode mode,
                                   const dlms::RftParseOptions& options = {}) {
    return score_total(dlms::parse_rft_output(raw_output, options), truth, mode);
}

/// Scores one batch line {output, ground_truth, mode?}; failures become
/// {"error": ...} objects so a stream never stops on a bad line.
inline json score_line(std::string_view line, Mode default_mode, const dlms::RftParseOptions& options = {}) {
    try {
        const auto j = json::parse(line);
        if (!j.is_object()) throw SchemaError("request must be a JSON object");
        if (!j.contains("output") || !j["output"].is_string()) throw SchemaError("'output' must be a string");
        if (!j.contains("ground_truth")) throw SchemaError("missing 'ground_truth'");
        Mode mode = default_mode;
        if (j.contains("mode")) {
            const auto m = j["mode"].is_string() ? parse_mode(j["mode"].get<std::string>()) : std::nullopt;
            if (!m) throw SchemaError("'mode' must be one of full, stage1, stage2, stage3");
            mode = *m;
        }
        return to_json(score_total(j["output"].get<std::string>(), ground_truth_from_json(j["ground_truth"]), mode,
                                   options));
    } catch (const json::exception& e) {
        return {{"error", std::string("invalid JSON: ") + e.what()}};
    } catch (const Error& e) {
        return {{"error", e.what()}};
    }
}

/// One output line per non-blank input line, in input order.
inline std::size_t score_stream(std::istream& in, std::ostream& out, Mode default_mode,
                                const dlms::RftParseOptions& options = {}) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        out << score_line(line, default_mode, options).dump() << '\n';
        ++n;
    }
    return n;
}

}  // namespace privgate::reward
