#pragma once

// SFT / RFT sample records and a seeded template-bank corpus generator.

#include "privgate/dlms_prompt.hpp"
#include "privgate/error.hpp"
#include "privgate/policy.hpp"
#include "privgate/reward.hpp"
#include "privgate/text.hpp"
#include "privgate/verdict.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace privgate::dataset {

using nlohmann::json;

struct SftSample {
    std::string message;
    Safety label = Safety::Safe;
    std::vector<std::string> violated_category_codes;
    std::vector<std::string> entities;  // the explanation, split on ';'

    std::string explanation() const { return reward::join_entities(entities); }

    reward::GroundTruth ground_truth() const {
        reward::GroundTruth gt;
        gt.safety = label;
        gt.categories.insert(violated_category_codes.begin(), violated_category_codes.end());
        gt.entities.insert(entities.begin(), entities.end());
        return gt;
    }

    friend bool operator==(const SftSample&, const SftSample&) = default;
};

inline void validate(const SftSample& s) {
    if (s.label == Safety::Safe) {
        if (!s.violated_category_codes.empty() || !s.entities.empty())
            throw SchemaError("safe sample must have no category codes and an empty explanation");
        return;
    }
    if (s.violated_category_codes.empty()) throw SchemaError("unsafe sample lists no category codes");
    for (const auto& e : s.entities)
        if (s.message.find(e) == std::string::npos)
            throw EntityNotInMessage("entity '" + e + "' does not occur in the message");
}

inline json to_json(const SftSample& s) {
    return {{"message", s.message},
            {"label", to_string(s.label)},
            {"violated_category_codes", s.violated_category_codes},
            {"explanation", s.explanation()}};
}

inline SftSample sft_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("sample must be a JSON object");
    SftSample s;
    if (!j.contains("message") || !j["message"].is_string()) throw SchemaError("'message' must be a string");
    s.message = j["message"].get<std::string>();
    const auto label = j.contains("label") && j["label"].is_string()
                           ? parse_safety(text::ascii_lower(j["label"].get<std::string>()))
                           : std::nullopt;
    if (!label) throw SchemaError("'label' must be 'safe' or 'unsafe'");
    s.label = *label;
    for (auto& c : reward::detail::string_list(j.value("violated_category_codes", json()), ','))
        s.violated_category_codes.push_back(text::ascii_upper(c));
    s.entities = reward::detail::string_list(j.value("explanation", json()), ';');
    validate(s);
    return s;
}

inline std::vector<SftSample> load_sft_dataset(std::istream& in) {
    std::vector<SftSample> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(sft_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw SchemaError("line " + std::to_string(n) + ": " + e.what());
        } catch (const EntityNotInMessage& e) {
            throw EntityNotInMessage("line " + std::to_string(n) + ": " + e.what());
        } catch (const SchemaError& e) {
            throw SchemaError("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<SftSample> load_sft_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    return load_sft_dataset(in);
}

inline void write_jsonl(std::ostream& out, const std::vector<SftSample>& samples) {
    for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

struct RftSample {
    std::string prompt;
    std::string ability = "privacy_risk_analysis";
    reward::GroundTruth ground_truth;
    std::vector<std::string> entity_order;  // keeps the explanation's order on output
    std::string split;
    std::size_t index = 0;
};

inline json to_json(const RftSample& s) {
    return {{"prompt", s.prompt},
            {"ability", s.ability},
            {"reward_model", {{"style", "rule"}, {"ground_truth", reward::to_json(s.ground_truth, s.entity_order)}}},
            {"extra_info", {{"split", s.split}, {"index", s.index}}}};
}

inline std::vector<RftSample> convert_sft_to_rft(const std::vector<SftSample>& samples,
                                                 const policy::PolicyCatalog& catalog,
                                                 const dlms::PromptTemplateKind& kind,
                                                 const std::string& split = "train") {
    std::vector<RftSample> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        RftSample r;
        r.prompt = dlms::build_rft_prompt(samples[i].message, catalog, kind);
        r.ground_truth = samples[i].ground_truth();
        r.entity_order = samples[i].entities;
        r.split = split;
        r.index = i;
        out.push_back(std::move(r));
    }
    return out;
}

// --- synthetic corpus ------------------------------------------------------

struct CorpusSpec {
    std::size_t safe = 670;
    std::size_t unsafe = 1641;
    std::size_t multi_label = 296;  // unsafe samples carrying two or more categories
    std::map<std::string, double> category_weights{{"T1", 567}, {"T2", 244}, {"T3", 255},
                                                   {"T4", 231}, {"T5", 248}, {"T6", 410}};
    std::uint64_t seed = 7;

    /// n samples with the default mix: 28.99% safe, 12.81% multi-labelled.
    static CorpusSpec with_total(std::size_t n, std::uint64_t seed = 7) {
        CorpusSpec s;
        s.safe = static_cast<std::size_t>(std::llround(static_cast<double>(n) * 0.2899));
        s.unsafe = n - s.safe;
        s.multi_label =
            std::min(s.unsafe, static_cast<std::size_t>(std::llround(static_cast<double>(n) * 0.1281)));
        s.seed = seed;
        return s;
    }
};

namespace detail {

// Deterministic across standard libraries: only the engine is from <random>.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
    bool chance(double p) { return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p; }
    template <class T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
    char digit() { return static_cast<char>('0' + below(10)); }
    char upper() { return static_cast<char>('A' + below(26)); }
    char lower() { return static_cast<char>('a' + below(26)); }
    std::string digits(std::size_t n, bool leading_nonzero = false) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i)
            s.push_back(i == 0 && leading_nonzero ? static_cast<char>('1' + below(9)) : digit());
        return s;
    }
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

inline const std::vector<std::string>& given_names() {
    static const std::vector<std::string> v{"tina", "li", "marco", "aisha", "kenji", "sofia", "david", "mei",
                                            "omar", "elena", "raj", "chloe", "lucas", "yuki", "ana", "peter"};
    return v;
}

inline const std::vector<std::string>& family_names() {
    static const std::vector<std::string> v{"vang", "chen", "rossi", "khan", "sato", "silva", "wong", "tan",
                                            "haddad", "petrov", "singh", "martin", "lopez", "kim", "ng", "fischer"};
    return v;
}

inline const std::vector<std::string>& mail_domains() {
    static const std::vector<std::string> v{"gmail.com", "support.org", "example.net", "mail.com.mo",
                                            "outlook.com", "corp.example.com", "qq.com", "mail.hk"};
    return v;
}

inline std::string make_email(Rng& r) {
    std::string local = r.pick(given_names());
    switch (r.below(3)) {
        case 0: local += r.pick(family_names()); break;
        case 1: local += "." + r.pick(family_names()); break;
        default: local += "_" + std::string(1, r.lower()) + r.pick(family_names()); break;
    }
    if (r.chance(0.2)) local += r.digits(6, true);
    return local + "@" + r.pick(mail_domains());
}

inline std::string make_personal_id(Rng& r) {
    switch (r.below(4)) {
        case 0:
            return std::string(1, r.upper()) + " " + r.digits(3) + " " + r.digits(3) + " " + r.digit();
        case 1:
            return std::string(1, r.upper()) + r.digits(6) + "(" + r.digit() + ")";
        case 2:
            return r.digits(3, true) + "-" + r.digits(4) + "-" + r.digits(3) + r.upper() + r.upper();
        default: {
            std::string s(1, r.upper());
            if (r.chance(0.5)) s.push_back(r.upper());
            return s + r.digits(r.between(7, 9), true);
        }
    }
}

inline std::string make_phone_number(Rng& r) {
    static const std::vector<std::string> cc{"1", "7", "44", "86", "852", "853", "65", "61"};
    switch (r.below(5)) {
        case 0:
            return "+" + r.pick(cc) + " " + r.digits(3, true) + " " + r.digits(3) + " " + r.digits(4);
        case 1:
            return "+" + r.pick(cc) + " 1" + r.digits(10);
        case 2:
            return "(" + r.digits(3, true) + ") " + r.digits(4, true) + "-" + r.digits(4);
        case 3:
            return "+1 (" + r.digits(3, true) + ") " + r.digits(3, true) + "-" + r.digits(4);
        default:
            return "+" + r.pick(cc) + "-" + r.digits(4, true) + "-" + r.digits(4);
    }
}

inline std::string make_fax_number(Rng& r) {
    switch (r.below(4)) {
        case 0: return "+" + r.digits(2, true) + " " + r.digits(4, true) + " " + r.digits(4);
        case 1: return "(" + r.digits(3, true) + ") " + r.digits(3, true) + "-" + r.digits(4);
        case 2: return r.digits(4, true) + " " + r.digits(4);
        default: return r.digits(3, true) + "-" + r.digits(3) + "-" + r.digits(4);
    }
}

inline std::string make_bank_account(Rng& r) {
    static const std::vector<std::string> countries{"DE", "FR", "NL", "ES", "IT", "CH"};
    switch (r.below(4)) {
        case 0: return r.pick(countries) + r.digits(2) + r.digits(18);
        case 1: return "GB" + r.digits(2) + std::string{r.upper(), r.upper(), r.upper(), r.upper()} + r.digits(14);
        case 2: {
            const auto raw = r.pick(countries) + r.digits(2) + r.digits(18);
            std::string spaced;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                if (i && i % 4 == 0) spaced.push_back(' ');
                spaced.push_back(raw[i]);
            }
            return spaced;
        }
        default:
            return r.chance(0.5) ? r.digits(r.between(10, 14), true)
                                 : r.digits(3, true) + "-" + r.digits(6) + "-" + r.digits(3);
    }
}

inline std::string with_commas(const std::string& digits) {
    std::string out;
    const std::size_t n = digits.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i && (n - i) % 3 == 0) out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

// At least six digits, so the amount is large enough to encrypt.
inline std::string make_money(Rng& r) {
    auto s = with_commas(r.digits(r.between(6, 9), true));
    if (r.chance(0.2)) s += "." + r.digits(2);
    return s;
}

struct Carrier {
    std::string before;
    std::string after;
};

// Carrier sentences. Phone carriers keep more than twenty cue-free bytes in
// front of the slot so a fax cue in a neighbouring sentence cannot reach it.
inline const std::map<std::string, std::vector<Carrier>>& carriers() {
    static const std::map<std::string, std::vector<Carrier>> bank{
        {"T1",
         {{"Contact the customer at ", "."},
          {"Forward the signed copy to ", " before Friday."},
          {"My work address is ", ", please use it for replies."},
          {"Please add ", " to the distribution list."}}},
        {"T2",
         {{"The applicant's identity card number is ", "."},
          {"Her passport number, ", ", was recorded at check-in."},
          {"Please verify personal ID ", " against the registry."},
          {"Staff record lists the ID as ", " for this employee."}}},
        {"T3",
         {{"If anything comes up, call me on ", "."},
          {"The client asked us to ring him back at ", " after lunch."},
          {"For urgent matters the on-call number is ", "."},
          {"You can reach our branch manager directly at ", "."}}},
        {"T4",
         {{"Send the signed form by fax to ", "."},
          {"Our office fax: ", " is monitored daily."},
          {"Please fax the invoice to ", " today."},
          {"The facsimile line is ", "."}}},
        {"T5",
         {{"Transfer the deposit to account ", "."},
          {"Her bank account number is ", ", held at the main branch."},
          {"Use IBAN ", " for the settlement."},
          {"Salary is paid into acct ", " every month."}}},
        {"T6",
         {{"Fund value $", " as of last quarter."},
          {"The loan amount is HKD ", "."},
          {"The client will invest ", " in the new portfolio."},
          {"Annual premium comes to USD ", " after discounts."}}},
    };
    return bank;
}

inline const std::vector<std::string>& intros() {
    static const std::vector<std::string> v{
        "Summarize this contract: Contract with Company A. ",
        "Please draft a polite reply to the following note. ",
        "Translate this message into formal English. ",
        "Check the grammar of this paragraph. ",
        "Rewrite the following email so it sounds friendlier. ",
        "Extract the action items from this memo. ",
    };
    return v;
}

inline const std::vector<std::string>& fillers() {
    static const std::vector<std::string> v{
        "The meeting has been moved to next week.",
        "Thanks again for your patience with the delay.",
        "Our team reviewed the draft and left a few comments.",
        "Let me know if the terms need further changes.",
        "The policy renewal is due at the end of the month.",
        "We appreciate your continued business.",
        "Please keep this confidential until the launch.",
        "The quarterly review covers 3 regions and 12 branches.",
        "Explain the VAT rules that apply to this purchase.",
        "The weather delayed the shipment by 2 days.",
    };
    return v;
}

inline std::string make_entity(const std::string& code, Rng& r) {
    if (code == "T1") return make_email(r);
    if (code == "T2") return make_personal_id(r);
    if (code == "T3") return make_phone_number(r);
    if (code == "T4") return make_fax_number(r);
    if (code == "T5") return make_bank_account(r);
    if (code == "T6") return make_money(r);
    throw UnsupportedCategory("no generator for category " + code);
}

}  // namespace detail

/// Random entity of a built-in category (exposed for property tests).
inline std::string generate_entity(const std::string& code, std::uint64_t seed) {
    detail::Rng r(seed);
    return detail::make_entity(code, r);
}

inline std::vector<SftSample> generate_synthetic_corpus(const policy::PolicyCatalog& catalog, const CorpusSpec& spec) {
    std::vector<std::string> codes;
    std::vector<double> weights;
    for (const auto& [code, w] : spec.category_weights) {
        if (!catalog.find_category(code) || !detail::carriers().contains(code))
            throw UnsupportedCategory("cannot generate samples for category " + code);
        if (w > 0) {
            codes.push_back(code);
            weights.push_back(w);
        }
    }
    if (spec.unsafe > 0 && codes.empty()) throw UnsupportedCategory("no category has positive weight");
    if (spec.multi_label > spec.unsafe) throw SchemaError("more multi-label samples than unsafe samples");
    if (spec.multi_label > 0 && codes.size() < 2) throw SchemaError("multi-label samples need two categories");

    detail::Rng r(spec.seed);
    auto draw = [&](std::vector<std::string>& taken) {
        double total = 0;
        for (std::size_t i = 0; i < codes.size(); ++i)
            if (std::find(taken.begin(), taken.end(), codes[i]) == taken.end()) total += weights[i];
        double x = static_cast<double>(r.below(1'000'000'000)) / 1e9 * total;
        for (std::size_t i = 0; i < codes.size(); ++i) {
            if (std::find(taken.begin(), taken.end(), codes[i]) != taken.end()) continue;
            if (x < weights[i]) {
                taken.push_back(codes[i]);
                return;
            }
            x -= weights[i];
        }
        for (const auto& c : codes)
            if (std::find(taken.begin(), taken.end(), c) == taken.end()) {
                taken.push_back(c);
                return;
            }
    };

    // Sample kinds in a shuffled order: 0 safe, 1 single-label, 2 multi-label.
    std::vector<int> kinds;
    kinds.insert(kinds.end(), spec.safe, 0);
    kinds.insert(kinds.end(), spec.unsafe - spec.multi_label, 1);
    kinds.insert(kinds.end(), spec.multi_label, 2);
    r.shuffle(kinds);

    std::vector<SftSample> out;
    out.reserve(kinds.size());
    for (const int kind : kinds) {
        SftSample s;
        std::vector<std::string> sentences;
        const auto n_fillers = r.between(kind == 0 ? 1 : 0, 2);
        for (std::size_t i = 0; i < n_fillers; ++i) sentences.push_back(r.pick(detail::fillers()));
        if (kind != 0) {
            std::vector<std::string> labels;
            draw(labels);
            if (kind == 2) {
                draw(labels);
                if (codes.size() > 2 && r.chance(0.1)) draw(labels);
            }
            for (const auto& code : labels) {
                const auto copies = code == "T6" && r.chance(0.15) ? 2 : 1;
                for (int k = 0; k < copies; ++k) {
                    std::string entity;
                    do {
                        entity = detail::make_entity(code, r);
                    } while (std::find(s.entities.begin(), s.entities.end(), entity) != s.entities.end());
                    const auto& c = r.pick(detail::carriers().at(code));
                    sentences.push_back(c.before + entity + c.after);
                    s.entities.push_back(entity);
                }
            }
            s.label = Safety::Unsafe;
            CodeSet ordered(labels.begin(), labels.end());
            s.violated_category_codes.assign(ordered.begin(), ordered.end());
        }
        r.shuffle(sentences);
        s.message = r.pick(detail::intros());
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            if (i) s.message += ' ';
            s.message += sentences[i];
        }
        // Explanation lists entities in message order.
        std::sort(s.entities.begin(), s.entities.end(), [&s](const std::string& a, const std::string& b) {
            return s.message.find(a) < s.message.find(b);
        });
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace privgate::dataset
