#pragma once

// Evaluation metrics at safety, category and entity level.

#include "privgate/error.hpp"
#include "privgate/policy.hpp"
#include "privgate/reward.hpp"
#include "privgate/verdict.hpp"

#include <json.hpp>

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

namespace privgate::metrics {

using nlohmann::json;
using reward::GroundTruth;

struct PredictionRecord {
    GroundTruth truth;
    Safety predicted_safety = Safety::Safe;
    CodeSet predicted_categories;
    std::vector<std::string> predicted_entities;
    std::optional<double> unsafe_score;
    std::map<std::string, double> category_scores;  // empty when not supplied
    std::optional<std::string> sanitized_text;
};

inline void require_nonempty(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw EmptyRun("no prediction records");
}

inline std::size_t symmetric_difference_size(const CodeSet& a, const CodeSet& b) {
    std::size_t n = 0;
    for (const auto& x : a) n += !b.contains(x);
    for (const auto& x : b) n += !a.contains(x);
    return n;
}

inline double subset_accuracy(const std::vector<PredictionRecord>& records) {
    require_nonempty(records);
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.truth.categories == r.predicted_categories;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

/// Per-label agreement over a universe of L labels. Labels outside the
/// universe still count as disagreements.
inline double hamming_accuracy(const std::vector<PredictionRecord>& records, std::size_t label_count) {
    require_nonempty(records);
    if (label_count == 0) throw EmptyRun("label universe is empty");
    const double cells = static_cast<double>(records.size()) * static_cast<double>(label_count);
    double wrong = 0;
    for (const auto& r : records)
        wrong += static_cast<double>(symmetric_difference_size(r.truth.categories, r.predicted_categories));
    return std::max(0.0, (cells - wrong) / cells);
}

enum class F1Averaging { Example, Micro, Macro };

inline std::string_view to_string(F1Averaging a) {
    switch (a) {
        case F1Averaging::Example: return "example";
        case F1Averaging::Micro: return "micro";
        case F1Averaging::Macro: return "macro";
    }
    return "example";
}

inline std::optional<F1Averaging> parse_averaging(std::string_view s) {
    if (s == "example") return F1Averaging::Example;
    if (s == "micro") return F1Averaging::Micro;
    if (s == "macro") return F1Averaging::Macro;
    return std::nullopt;
}

inline double f1_from_counts(double tp, double fp, double fn) {
    const double denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2 * tp / denom;
}

/// labels is the universe used by macro averaging; other modes ignore it.
inline double multi_label_f1(const std::vector<PredictionRecord>& records,
                             F1Averaging averaging = F1Averaging::Example,
                             const std::vector<std::string>& labels = {}) {
    require_nonempty(records);
    auto counts = [](const CodeSet& y, const CodeSet& p) {
        double tp = 0;
        for (const auto& x : p) tp += y.contains(x);
        return std::tuple{tp, static_cast<double>(p.size()) - tp, static_cast<double>(y.size()) - tp};
    };
    if (averaging == F1Averaging::Example) {
        double sum = 0;
        for (const auto& r : records) {
            const auto [tp, fp, fn] = counts(r.truth.categories, r.predicted_categories);
            sum += f1_from_counts(tp, fp, fn);
        }
        return sum / static_cast<double>(records.size());
    }
    if (averaging == F1Averaging::Micro) {
        double tp = 0, fp = 0, fn = 0;
        for (const auto& r : records) {
            const auto [a, b, c] = counts(r.truth.categories, r.predicted_categories);
            tp += a;
            fp += b;
            fn += c;
        }
        return f1_from_counts(tp, fp, fn);
    }
    if (labels.empty()) throw EmptyRun("macro averaging needs a label universe");
    double sum = 0;
    for (const auto& l : labels) {
        double tp = 0, fp = 0, fn = 0;
        for (const auto& r : records) {
            const bool y = r.truth.categories.contains(l);
            const bool p = r.predicted_categories.contains(l);
            tp += y && p;
            fp += !y && p;
            fn += y && !p;
        }
        sum += f1_from_counts(tp, fp, fn);
    }
    return sum / static_cast<double>(labels.size());
}

struct BinaryMetrics {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Unsafe is the positive class.
inline BinaryMetrics binary_metrics(const std::vector<PredictionRecord>& records) {
    require_nonempty(records);
    BinaryMetrics m;
    for (const auto& r : records) {
        const bool y = r.truth.safety == Safety::Unsafe;
        const bool p = r.predicted_safety == Safety::Unsafe;
        m.tp += y && p;
        m.fp += !y && p;
        m.fn += y && !p;
        m.tn += !y && !p;
    }
    const auto n = static_cast<double>(records.size());
    m.accuracy = static_cast<double>(m.tp + m.tn) / n;
    m.precision = m.tp + m.fp ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = m.tp + m.fn ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

/// Average precision: sum over distinct score thresholds (descending) of
/// (R_k - R_{k-1}) * P_k, with tied scores entering the ranking together.
inline double average_precision(const std::vector<double>& scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size()) throw std::invalid_argument("scores and labels differ in length");
    const auto total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
    if (total_pos == 0) throw NoPositives("average precision needs at least one positive");
    std::vector<std::size_t> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0, tp = 0, seen = 0, prev_recall = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            tp += positive[idx[j]];
            ++seen;
            ++j;
        }
        const double recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / seen);
        prev_recall = recall;
        i = j;
    }
    return ap;
}

/// Safety-level AUPRC from unsafe_score.
inline double auprc(const std::vector<PredictionRecord>& records) {
    require_nonempty(records);
    std::vector<double> scores;
    std::vector<bool> labels;
    for (const auto& r : records) {
        if (!r.unsafe_score) throw MissingScores("a record lacks unsafe_score");
        scores.push_back(*r.unsafe_score);
        labels.push_back(r.truth.safety == Safety::Unsafe);
    }
    return average_precision(scores, labels);
}

/// Category-level AUPRC, micro-averaged over (record, label) pairs; a label
/// missing from a record's category_scores scores 0.
inline double category_auprc(const std::vector<PredictionRecord>& records, const std::vector<std::string>& labels) {
    require_nonempty(records);
    std::vector<double> scores;
    std::vector<bool> truth;
    for (const auto& r : records) {
        if (r.category_scores.empty()) throw MissingScores("a record lacks category_scores");
        for (const auto& l : labels) {
            const auto it = r.category_scores.find(l);
            scores.push_back(it == r.category_scores.end() ? 0.0 : it->second);
            truth.push_back(r.truth.categories.contains(l));
        }
    }
    return average_precision(scores, truth);
}

/// Fraction of ground-truth entities whose exact string is absent from the
/// record's sanitized text.
inline double privacy_hiding_rate(const std::vector<PredictionRecord>& records) {
    std::size_t total = 0, hidden = 0;
    for (const auto& r : records) {
        if (r.truth.entities.empty()) continue;
        if (!r.sanitized_text) throw MissingScores("a record with entities lacks sanitized_text");
        for (const auto& e : r.truth.entities) {
            ++total;
            hidden += r.sanitized_text->find(e) == std::string::npos;
        }
    }
    if (total == 0) throw NoEntities("run contains no ground-truth entities");
    return static_cast<double>(hidden) / static_cast<double>(total);
}

struct EvalReport {
    double safety_accuracy = 0;
    double safety_f1 = 0;
    std::optional<double> safety_auprc;
    double category_hamming = 0;
    double category_subset = 0;
    double category_f1 = 0;
    std::optional<double> category_auprc;
    std::optional<double> phr;
    F1Averaging averaging = F1Averaging::Example;
    std::size_t records = 0;
    std::size_t positives = 0;
    std::size_t entities = 0;
    std::size_t label_count = 0;
    std::vector<std::string> omitted;  // metric name -> reason, "name: reason"
};

/// Label universe: the catalog's codes plus any code seen in the run.
inline std::vector<std::string> label_universe(const std::vector<PredictionRecord>& records,
                                               const policy::PolicyCatalog& catalog) {
    CodeSet all;
    for (const auto& c : catalog.categories) all.insert(c.code);
    for (const auto& r : catalog.rules) all.insert(r.code);
    for (const auto& r : records) {
        all.insert(r.truth.categories.begin(), r.truth.categories.end());
        all.insert(r.predicted_categories.begin(), r.predicted_categories.end());
    }
    return {all.begin(), all.end()};
}

inline EvalReport evaluate_run(const std::vector<PredictionRecord>& records, const policy::PolicyCatalog& catalog,
                               F1Averaging averaging = F1Averaging::Example) {
    require_nonempty(records);
    EvalReport rep;
    const auto labels = label_universe(records, catalog);
    const auto bin = binary_metrics(records);
    rep.safety_accuracy = bin.accuracy;
    rep.safety_f1 = bin.f1;
    rep.category_hamming = hamming_accuracy(records, labels.size());
    rep.category_subset = subset_accuracy(records);
    rep.category_f1 = multi_label_f1(records, averaging, labels);
    rep.averaging = averaging;
    rep.records = records.size();
    rep.positives = bin.tp + bin.fn;
    rep.label_count = labels.size();
    for (const auto& r : records) rep.entities += r.truth.entities.size();

    auto optional_metric = [&rep](const char* name, auto&& fn) -> std::optional<double> {
        try {
            return fn();
        } catch (const Error& e) {
            rep.omitted.push_back(std::string(name) + ": " + e.what());
            return std::nullopt;
        }
    };
    rep.safety_auprc = optional_metric("safety.auprc", [&] { return auprc(records); });
    rep.category_auprc = optional_metric("category.auprc", [&] { return category_auprc(records, labels); });
    rep.phr = optional_metric("entity.phr", [&] { return privacy_hiding_rate(records); });
    return rep;
}

inline json to_json(const EvalReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"safety", {{"accuracy", r.safety_accuracy}, {"f1", r.safety_f1}, {"auprc", opt(r.safety_auprc)}}},
            {"category",
             {{"hamming_accuracy", r.category_hamming},
              {"subset_accuracy", r.category_subset},
              {"multi_label_f1", r.category_f1},
              {"auprc", opt(r.category_auprc)}}},
            {"entity", {{"phr", opt(r.phr)}}},
            {"counts",
             {{"records", r.records}, {"positives", r.positives}, {"entities", r.entities}, {"labels", r.label_count}}},
            {"f1_averaging", to_string(r.averaging)},
            {"omitted", r.omitted}};
}

inline constexpr std::string_view kCsvHeader =
    "safety_accuracy,safety_f1,safety_auprc,category_hamming,category_subset,category_multi_label_f1,"
    "category_auprc,phr";

/// One CSV row in the column order of the usual results table; omitted
/// metrics are empty cells.
inline std::string to_csv_row(const EvalReport& r) {
    std::ostringstream out;
    out.precision(4);
    out << std::fixed;
    auto cell = [&out](const std::optional<double>& v) {
        if (v) out << *v;
    };
    out << r.safety_accuracy << ',' << r.safety_f1 << ',';
    cell(r.safety_auprc);
    out << ',' << r.category_hamming << ',' << r.category_subset << ',' << r.category_f1 << ',';
    cell(r.category_auprc);
    out << ',';
    cell(r.phr);
    return out.str();
}

// --- JSONL input -----------------------------------------------------------

inline PredictionRecord record_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("prediction record must be an object");
    PredictionRecord r;
    if (!j.contains("truth")) throw SchemaError("missing 'truth'");
    r.truth = reward::ground_truth_from_json(j["truth"]);
    if (!j.contains("predicted") || !j["predicted"].is_object()) throw SchemaError("missing 'predicted'");
    const auto& p = j["predicted"];
    const auto s = p.contains("safety") && p["safety"].is_string()
                       ? parse_safety(text::ascii_lower(p["safety"].get<std::string>()))
                       : std::nullopt;
    if (!s) throw SchemaError("predicted.safety must be 'safe' or 'unsafe'");
    r.predicted_safety = *s;
    for (auto& c : reward::detail::string_list(p.value("categories", json()), ','))
        r.predicted_categories.insert(text::ascii_upper(c));
    r.predicted_entities = reward::detail::string_list(p.value("entities", json()), ';');
    if (j.contains("unsafe_score") && !j["unsafe_score"].is_null()) {
        const double v = j["unsafe_score"].get<double>();
        if (!(v >= 0.0 && v <= 1.0)) throw SchemaError("unsafe_score must lie in [0, 1]");
        r.unsafe_score = v;
    }
    if (j.contains("category_scores") && j["category_scores"].is_object())
        for (const auto& [k, v] : j["category_scores"].items()) r.category_scores[text::ascii_upper(k)] = v.get<double>();
    if (j.contains("sanitized_text") && j["sanitized_text"].is_string())
        r.sanitized_text = j["sanitized_text"].get<std::string>();
    return r;
}

inline json to_json(const PredictionRecord& r) {
    json j = {{"truth", reward::to_json(r.truth)},
              {"predicted",
               {{"safety", to_string(r.predicted_safety)},
                {"categories", std::vector<std::string>(r.predicted_categories.begin(), r.predicted_categories.end())},
                {"entities", reward::join_entities(r.predicted_entities)}}}};
    if (r.unsafe_score) j["unsafe_score"] = *r.unsafe_score;
    if (!r.category_scores.empty()) j["category_scores"] = r.category_scores;
    if (r.sanitized_text) j["sanitized_text"] = *r.sanitized_text;
    return j;
}

inline std::vector<PredictionRecord> load_records(std::istream& in) {
    std::vector<PredictionRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw SchemaError("line " + std::to_string(n) + ": " + e.what());
        } catch (const SchemaError& e) {
            throw SchemaError("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace privgate::metrics
