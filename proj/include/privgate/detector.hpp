#pragma once

// Deterministic pattern detector for the sensitive-data taxonomy.
//
// Each category owns one or more regular-language rules. A rule may demand
// (or forbid) a cue word within a window of bytes preceding the match; this
// is what separates fax numbers (T4) from phone numbers (T3) and bare digit
// accounts (T5) from arbitrary numbers. Candidates from every category are
// resolved greedily: longer span first, then earlier start, then lower code.

#include "privgate/error.hpp"
#include "privgate/policy.hpp"
#include "privgate/text.hpp"
#include "privgate/verdict.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace privgate::detector {

enum class CueMode { None, Require, Forbid };

struct PatternRule {
    std::string source;
    std::size_t min_digits = 0;
    std::size_t max_digits = std::numeric_limits<std::size_t>::max();
    CueMode cue_mode = CueMode::None;
    std::vector<std::string> cue_words;
    std::size_t cue_window = 0;
    bool word_boundary = true;
};

struct CategoryRules {
    std::string code;
    std::vector<PatternRule> rules;
};

inline const std::vector<std::string>& fax_cues() {
    static const std::vector<std::string> cues{"fax", "facsimile"};
    return cues;
}

inline const std::vector<std::string>& account_cues() {
    static const std::vector<std::string> cues{"account", "acct", "a/c", "iban", "bank"};
    return cues;
}

inline constexpr std::size_t kFaxCueWindow = 20;
inline constexpr std::size_t kAccountCueWindow = 30;

namespace patterns {
inline constexpr const char* kEmail =
    R"([A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,})";
inline constexpr const char* kIdSpaced = R"([A-Z]{1,2} [0-9]{3} [0-9]{3} [0-9A-Z])";
inline constexpr const char* kIdCheckDigit = R"([A-Z]{1,2}[0-9]{6}\([0-9A]\))";
inline constexpr const char* kIdDashedSuffix = R"([0-9]{2,4}(?:-[0-9]{2,4}){1,3}[A-Z]{1,3})";
inline constexpr const char* kIdPrefixed = R"([A-Z]{1,3}[0-9]{6,10}[A-Z0-9]?)";
inline constexpr const char* kPhoneIntl =
    R"(\+[0-9]{1,3}(?:[ -]?\([0-9]{1,4}\))?[ -]?[0-9]{2,}(?:[ -][0-9]{2,})*)";
inline constexpr const char* kPhoneArea = R"(\([0-9]{1,4}\)[ -]?[0-9]{2,}(?:[ -][0-9]{2,})*)";
inline constexpr const char* kPhoneBare = R"([0-9]{2,5}(?:[ -][0-9]{2,5}){1,4})";
inline constexpr const char* kIban = R"([A-Z]{2}[0-9]{2}[A-Z0-9]{11,30})";
inline constexpr const char* kIbanSpaced = R"([A-Z]{2}[0-9]{2}(?: [A-Z0-9]{4}){2,7}(?: [A-Z0-9]{1,3})?)";
inline constexpr const char* kAccountDigits = R"([0-9]{8,22})";
inline constexpr const char* kAccountDashed = R"([0-9]+(?:-[0-9]+)+)";
inline constexpr const char* kMoney = R"([0-9]{1,3}(?:,[0-9]{3})+(?:\.[0-9]{1,2})?)";
}  // namespace patterns

/// Built-in rule set for T1..T6, or nullopt for codes without one.
inline std::optional<std::vector<PatternRule>> builtin_rules(std::string_view code) {
    using namespace patterns;
    if (code == "T1") return std::vector<PatternRule>{{.source = kEmail}};
    if (code == "T2")
        return std::vector<PatternRule>{{.source = kIdSpaced},
                                        {.source = kIdCheckDigit},
                                        {.source = kIdDashedSuffix},
                                        {.source = kIdPrefixed}};
    if (code == "T3") {
        const PatternRule base{.min_digits = 7,
                               .max_digits = 15,
                               .cue_mode = CueMode::Forbid,
                               .cue_words = fax_cues(),
                               .cue_window = kFaxCueWindow};
        auto intl = base;
        intl.source = kPhoneIntl;
        auto area = base;
        area.source = kPhoneArea;
        return std::vector<PatternRule>{intl, area};
    }
    if (code == "T4") {
        const PatternRule base{.min_digits = 7,
                               .max_digits = 15,
                               .cue_mode = CueMode::Require,
                               .cue_words = fax_cues(),
                               .cue_window = kFaxCueWindow};
        auto intl = base;
        intl.source = kPhoneIntl;
        auto area = base;
        area.source = kPhoneArea;
        auto bare = base;
        bare.source = kPhoneBare;
        return std::vector<PatternRule>{intl, area, bare};
    }
    if (code == "T5") {
        const PatternRule cued{.min_digits = 8,
                               .max_digits = 22,
                               .cue_mode = CueMode::Require,
                               .cue_words = account_cues(),
                               .cue_window = kAccountCueWindow};
        auto digits = cued;
        digits.source = kAccountDigits;
        auto dashed = cued;
        dashed.source = kAccountDashed;
        return std::vector<PatternRule>{{.source = kIban}, {.source = kIbanSpaced}, digits, dashed};
    }
    if (code == "T6") return std::vector<PatternRule>{{.source = kMoney}};
    return std::nullopt;
}

namespace detail {

struct CompiledRule {
    PatternRule rule;
    std::regex regex;
};

struct CompiledCategory {
    std::string code;
    std::vector<CompiledRule> rules;
};

inline std::size_t count_digits(std::string_view s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](unsigned char c) { return text::is_ascii_digit(c); }));
}

inline bool is_ascii_alpha(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Case-insensitive cue search in the bytes preceding the match; a cue only
// counts when it starts a word.
inline bool has_cue(std::string_view prompt, std::size_t start, const PatternRule& rule) {
    const std::size_t from = start > rule.cue_window ? start - rule.cue_window : 0;
    const auto window = text::ascii_lower(prompt.substr(from, start - from));
    for (const auto& cue : rule.cue_words) {
        const auto needle = text::ascii_lower(cue);
        for (auto pos = window.find(needle); pos != std::string::npos; pos = window.find(needle, pos + 1)) {
            const std::size_t abs = from + pos;
            if (abs == 0 || !is_ascii_alpha(static_cast<unsigned char>(prompt[abs - 1]))) return true;
        }
    }
    return false;
}

inline bool accept(std::string_view prompt, std::size_t start, std::size_t end, const PatternRule& rule) {
    if (end <= start) return false;
    if (rule.word_boundary) {
        if (start > 0 && text::is_ascii_alnum(static_cast<unsigned char>(prompt[start - 1]))) return false;
        if (end < prompt.size() && text::is_ascii_alnum(static_cast<unsigned char>(prompt[end]))) return false;
    }
    const auto digits = count_digits(prompt.substr(start, end - start));
    if (digits < rule.min_digits || digits > rule.max_digits) return false;
    switch (rule.cue_mode) {
        case CueMode::None: return true;
        case CueMode::Require: return has_cue(prompt, start, rule);
        case CueMode::Forbid: return !has_cue(prompt, start, rule);
    }
    return false;
}

// Non-overlapping accepted matches of one rule, left to right. A rejected
// match restarts the search one byte after its start.
inline void collect(std::string_view prompt, const std::string& code, const CompiledRule& rule,
                    std::vector<Entity>& out) {
    std::size_t pos = 0;
    std::cmatch m;
    const char* const base = prompt.data();
    while (pos <= prompt.size()) {
        auto flags = std::regex_constants::match_default;
        if (pos > 0) flags |= std::regex_constants::match_prev_avail;
        if (!std::regex_search(base + pos, base + prompt.size(), m, rule.regex, flags)) return;
        const std::size_t start = pos + static_cast<std::size_t>(m.position(0));
        const std::size_t end = start + static_cast<std::size_t>(m.length(0));
        if (accept(prompt, start, end, rule.rule)) {
            out.push_back({code, std::string(prompt.substr(start, end - start)), start, end});
            pos = end;
        } else {
            pos = start + 1;
        }
    }
}

inline std::vector<Entity> resolve_overlaps(std::vector<Entity> candidates) {
    std::sort(candidates.begin(), candidates.end(), [](const Entity& a, const Entity& b) {
        const auto la = a.end - a.start;
        const auto lb = b.end - b.start;
        if (la != lb) return la > lb;
        if (a.start != b.start) return a.start < b.start;
        return CodeLess{}(a.category_code, b.category_code);
    });
    std::vector<Entity> kept;
    for (auto& c : candidates) {
        const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const Entity& k) {
            return c.start < k.end && k.start < c.end;
        });
        if (!overlaps) kept.push_back(std::move(c));
    }
    std::sort(kept.begin(), kept.end(), [](const Entity& a, const Entity& b) { return a.start < b.start; });
    return kept;
}

}  // namespace detail

/// Effective rules for a category: the custom pattern when one is configured,
/// otherwise the built-in set with any cue overrides applied.
inline std::vector<PatternRule> rules_for(const policy::Category& category) {
    const auto& ov = category.detector;
    std::vector<PatternRule> rules;
    if (ov.pattern) {
        PatternRule r{.source = *ov.pattern, .word_boundary = false};
        if (ov.cue_words) {
            r.cue_mode = CueMode::Require;
            r.cue_words = *ov.cue_words;
            r.cue_window = static_cast<std::size_t>(ov.cue_window.value_or(static_cast<int>(kFaxCueWindow)));
        }
        rules.push_back(std::move(r));
        return rules;
    }
    auto builtin = builtin_rules(category.code);
    if (!builtin)
        throw UnsupportedCategory("category " + category.code +
                                  " has no built-in pattern and no custom 'pattern'");
    for (auto& r : *builtin) {
        if (r.cue_mode != CueMode::None) {
            if (ov.cue_words) r.cue_words = *ov.cue_words;
            if (ov.cue_window) r.cue_window = static_cast<std::size_t>(*ov.cue_window);
        }
    }
    return *builtin;
}

class Detector {
public:
    explicit Detector(const policy::PolicyCatalog& catalog) {
        for (const auto& c : catalog.categories) categories_.push_back(compile(c));
        if (categories_.empty())
            throw UnsupportedCategory("catalog has no categories the pattern detector can match");
    }

    Verdict detect(std::string_view prompt) const {
        std::vector<Entity> candidates;
        for (const auto& cat : categories_)
            for (const auto& rule : cat.rules) detail::collect(prompt, cat.code, rule, candidates);
        return Verdict::from_entities(detail::resolve_overlaps(std::move(candidates)));
    }

    std::vector<Entity> match_category(std::string_view prompt, std::string_view code) const {
        for (const auto& cat : categories_) {
            if (cat.code != code) continue;
            std::vector<Entity> candidates;
            for (const auto& rule : cat.rules) detail::collect(prompt, cat.code, rule, candidates);
            return detail::resolve_overlaps(std::move(candidates));
        }
        throw UnsupportedCategory("category " + std::string(code) + " is not configured");
    }

private:
    static detail::CompiledCategory compile(const policy::Category& category) {
        detail::CompiledCategory out{category.code, {}};
        for (auto& r : rules_for(category)) {
            std::regex re(r.source, std::regex::ECMAScript | std::regex::optimize);
            out.rules.push_back({std::move(r), std::move(re)});
        }
        return out;
    }

    std::vector<detail::CompiledCategory> categories_;
};

inline Verdict detect(std::string_view prompt, const policy::PolicyCatalog& catalog) {
    return Detector(catalog).detect(prompt);
}

/// Matches of a single category; the category need not belong to a catalog.
inline std::vector<Entity> match_category(std::string_view prompt, const policy::Category& category) {
    policy::PolicyCatalog single;
    single.categories.push_back(category);
    return Detector(single).match_category(prompt, category.code);
}

}  // namespace privgate::detector
