#pragma once

// Parsers for detector-model outputs.
//
// Answer grammar (shared by SFT outputs and the RFT <answer> body):
//   line 1: safe | unsafe          (case-insensitive)
//   line 2: comma-separated codes  (unsafe only)
//   line 3: semicolon-separated entity strings, verbatim (unsafe only)
// Blank lines are ignored; lines past the third continue the entity list.

#include "privgate/error.hpp"
#include "privgate/policy.hpp"
#include "privgate/text.hpp"
#include "privgate/verdict.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace privgate::dlms {

struct ParsedAnswer {
    Safety safety = Safety::Safe;
    CodeSet categories;
    std::vector<std::string> entities;      // unique, first-seen order
    std::vector<std::string> unknown_codes; // codes absent from the catalog, when one was given
};

/// The answer in the three-line grammar (inverse of parse_sft_output).
inline std::string format_answer(Safety safety, const CodeSet& categories,
                                 const std::vector<std::string>& entities) {
    if (safety == Safety::Safe) return "safe";
    std::string out = "unsafe\n";
    bool first = true;
    for (const auto& c : categories) {
        if (!first) out += ", ";
        out += c;
        first = false;
    }
    out += "\n";
    for (std::size_t i = 0; i < entities.size(); ++i) {
        if (i) out += "; ";
        out += entities[i];
    }
    return out;
}

inline std::string format_answer(const Verdict& v) {
    std::vector<std::string> entities;
    for (const auto& e : v.entities)
        if (std::find(entities.begin(), entities.end(), e.text) == entities.end()) entities.push_back(e.text);
    return format_answer(v.safety, v.categories, entities);
}

inline ParsedAnswer parse_sft_output(std::string_view raw, const policy::PolicyCatalog* catalog = nullptr) {
    std::vector<std::string_view> lines;
    for (const auto line : text::split(raw, '\n')) {
        const auto t = text::trim(line);
        if (!t.empty()) lines.push_back(t);
    }
    if (lines.empty()) throw MalformedOutput("empty output");

    const auto label = text::ascii_lower(lines[0]);
    ParsedAnswer out;
    if (label == "safe") {
        out.safety = Safety::Safe;
        return out;
    }
    if (label != "unsafe") throw MalformedOutput("first line must be 'safe' or 'unsafe', got '" + std::string(lines[0]) + "'");
    out.safety = Safety::Unsafe;
    if (lines.size() < 3) throw MissingLines("'unsafe' output must list category codes and entities");

    for (const auto code : text::split(lines[1], ',')) {
        const auto c = text::ascii_upper(text::trim(code));
        if (c.empty()) continue;
        if (out.categories.insert(c).second && catalog && !catalog->has_code(c))
            out.unknown_codes.push_back(c);
    }

    std::string entity_text(lines[2]);
    for (std::size_t i = 3; i < lines.size(); ++i) {
        entity_text += ' ';
        entity_text += lines[i];
    }
    for (const auto item : text::split(entity_text, ';')) {
        const auto e = std::string(text::trim(item));
        if (!e.empty() && std::find(out.entities.begin(), out.entities.end(), e) == out.entities.end())
            out.entities.push_back(e);
    }
    return out;
}

inline constexpr std::string_view kAnalyzeOpen = "<analyze>";
inline constexpr std::string_view kAnalyzeClose = "</analyze>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

struct RftParseOptions {
    // Accepted after </answer> (besides nothing at all).
    std::vector<std::string> eos_markers{"<|end_of_text|>"};
};

struct ModelOutput {
    std::string raw;
    bool format_valid = false;
    std::string format_error;
    std::optional<std::string> analysis;
    std::optional<ParsedAnswer> answer;
    std::string answer_error;
    std::string trailing;
};

inline ModelOutput parse_rft_output(std::string_view raw, const RftParseOptions& options = {},
                                    const policy::PolicyCatalog* catalog = nullptr) {
    ModelOutput out;
    out.raw = std::string(raw);

    const auto n_ao = text::count_occurrences(raw, kAnalyzeOpen);
    const auto n_ac = text::count_occurrences(raw, kAnalyzeClose);
    const auto n_bo = text::count_occurrences(raw, kAnswerOpen);
    const auto n_bc = text::count_occurrences(raw, kAnswerClose);
    const auto ao = raw.find(kAnalyzeOpen);
    const auto ac = raw.find(kAnalyzeClose);
    const auto bo = raw.find(kAnswerOpen);
    const auto bc = raw.find(kAnswerClose);

    if (n_ao == 1 && n_ac == 1 && ao < ac)
        out.analysis = std::string(raw.substr(ao + kAnalyzeOpen.size(), ac - ao - kAnalyzeOpen.size()));

    // The answer is read whenever a single well-ordered pair exists, so that
    // rewards can still score content in malformed outputs.
    if (n_bo == 1 && n_bc == 1 && bo < bc) {
        const auto body = raw.substr(bo + kAnswerOpen.size(), bc - bo - kAnswerOpen.size());
        try {
            out.answer = parse_sft_output(body, catalog);
        } catch (const MalformedOutput& e) {
            out.answer_error = e.what();
        }
        out.trailing = std::string(raw.substr(bc + kAnswerClose.size()));
    } else {
        out.answer_error = "no single <answer>...</answer> block";
    }

    auto fail = [&out](std::string why) {
        out.format_valid = false;
        out.format_error = std::move(why);
        return out;
    };
    if (n_ao != 1 || n_ac != 1 || n_bo != 1 || n_bc != 1) return fail("each tag must appear exactly once");
    if (!(ao < ac && ac < bo && bo < bc)) return fail("tags out of order");
    if (!text::trim(raw.substr(0, ao)).empty()) return fail("content before <analyze>");
    const auto gap_start = ac + kAnalyzeClose.size();
    if (!text::trim(raw.substr(gap_start, bo - gap_start)).empty())
        return fail("content between </analyze> and <answer>");
    const auto tail = text::trim(out.trailing);
    if (!tail.empty() &&
        std::find(options.eos_markers.begin(), options.eos_markers.end(), tail) == options.eos_markers.end())
        return fail("unexpected content after </answer>");
    out.format_valid = true;
    return out;
}

}  // namespace privgate::dlms
