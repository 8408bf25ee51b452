#include "privgate/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace privgate;
using namespace privgate::metrics;

namespace {

PredictionRecord rec(CodeSet truth, CodeSet pred) {
    PredictionRecord r;
    r.truth.safety = truth.empty() ? Safety::Safe : Safety::Unsafe;
    r.truth.categories = std::move(truth);
    r.predicted_safety = pred.empty() ? Safety::Safe : Safety::Unsafe;
    r.predicted_categories = std::move(pred);
    return r;
}

PredictionRecord binary(Safety truth, Safety pred) {
    PredictionRecord r;
    r.truth.safety = truth;
    r.predicted_safety = pred;
    return r;
}

std::vector<std::string> labels(unsigned L) {
    std::vector<std::string> out;
    for (unsigned l = 0; l < L; ++l) out.push_back(oracle::label_name(l));
    return out;
}

// Calls fn(run, bit_run) for every N x L label matrix pair.
template <class Fn>
void for_each_run(unsigned N, unsigned L, Fn&& fn) {
    const unsigned cells = 1u << L;
    std::vector<CodeSet> sets;
    for (unsigned m = 0; m < cells; ++m) sets.push_back(oracle::codes_of(m));
    std::size_t total = 1;
    for (unsigned i = 0; i < 2 * N; ++i) total *= cells;
    std::vector<oracle::BitRecord> bits(N);
    std::vector<PredictionRecord> run(N);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (unsigned i = 0; i < N; ++i) {
            bits[i].truth = static_cast<unsigned>(c % cells);
            c /= cells;
            bits[i].pred = static_cast<unsigned>(c % cells);
            c /= cells;
            run[i] = rec(sets[bits[i].truth], sets[bits[i].pred]);
        }
        fn(run, bits);
    }
}

}  // namespace

TEST(Metrics, SubsetExamples) {
    EXPECT_DOUBLE_EQ(subset_accuracy({rec({"T1"}, {"T1"}), rec({"T1", "T6"}, {"T1"})}), 0.5);
    EXPECT_DOUBLE_EQ(subset_accuracy({rec({"T1"}, {"T1"}), rec({"T2"}, {"T2"})}), 1.0);
    EXPECT_DOUBLE_EQ(subset_accuracy({rec({"T1"}, {}), rec({"T2"}, {})}), 0.0);
}

TEST(Metrics, HammingExamples) {
    EXPECT_DOUBLE_EQ(hamming_accuracy({rec({"T1"}, {"T1"}), rec({"T1", "T6"}, {"T1"})}, 6), 11.0 / 12.0);
    EXPECT_DOUBLE_EQ(hamming_accuracy({rec({"T1"}, {"T1"})}, 6), 1.0);
    EXPECT_THROW(hamming_accuracy({rec({"T1"}, {"T1"})}, 0), EmptyRun);
}

TEST(Metrics, F1Examples) {
    EXPECT_DOUBLE_EQ(multi_label_f1({rec({"T1", "T6"}, {"T1"})}), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(multi_label_f1({rec({"T1"}, {"T1"}), rec({}, {})}), 1.0);
    EXPECT_DOUBLE_EQ(multi_label_f1({rec({"T1"}, {"T2"})}), 0.0);
}

TEST(Metrics, BinaryExamples) {
    const auto m = binary_metrics({binary(Safety::Unsafe, Safety::Unsafe), binary(Safety::Unsafe, Safety::Safe)});
    EXPECT_EQ(m.tp, 1u);
    EXPECT_EQ(m.fn, 1u);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
    const auto right = binary_metrics({binary(Safety::Unsafe, Safety::Unsafe), binary(Safety::Safe, Safety::Safe)});
    EXPECT_DOUBLE_EQ(right.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(right.f1, 1.0);
    const auto wrong = binary_metrics({binary(Safety::Unsafe, Safety::Safe), binary(Safety::Safe, Safety::Unsafe)});
    EXPECT_DOUBLE_EQ(wrong.accuracy, 0.0);
    EXPECT_DOUBLE_EQ(wrong.f1, 0.0);
}

TEST(Metrics, AveragePrecisionExamples) {
    EXPECT_DOUBLE_EQ(average_precision({0.9, 0.8, 0.1}, {true, true, false}), 1.0);
    EXPECT_DOUBLE_EQ(average_precision({0.1, 0.9}, {true, false}), 0.5);
    EXPECT_DOUBLE_EQ(average_precision({0.5, 0.5, 0.5, 0.5}, {true, false, false, true}), 0.5);
    EXPECT_DOUBLE_EQ(average_precision({0.5, 0.5, 0.5}, {true, false, false}), 1.0 / 3.0);
    EXPECT_THROW(average_precision({0.5}, {false}), NoPositives);
}

TEST(Metrics, AuprcNeedsScores) {
    auto a = binary(Safety::Unsafe, Safety::Unsafe);
    a.unsafe_score = 1.0;
    auto b = binary(Safety::Safe, Safety::Safe);
    EXPECT_THROW(auprc({a, b}), MissingScores);
    b.unsafe_score = 0.0;
    EXPECT_DOUBLE_EQ(auprc({a, b}), 1.0);
    a.truth.safety = Safety::Safe;
    EXPECT_THROW(auprc({a, b}), NoPositives);
}

TEST(Metrics, PrivacyHidingRate) {
    PredictionRecord r = rec({"T1"}, {"T1"});
    r.truth.entities = {"a@b.co", "150,000"};
    r.sanitized_text = "mail x@y.zz about 150,000";
    EXPECT_DOUBLE_EQ(privacy_hiding_rate({r}), 0.5);
    r.sanitized_text = "mail a@b.co about 150,000";
    EXPECT_DOUBLE_EQ(privacy_hiding_rate({r}), 0.0);
    r.sanitized_text = "mail A@B.CO about 1";
    EXPECT_DOUBLE_EQ(privacy_hiding_rate({r}), 1.0);
    EXPECT_THROW(privacy_hiding_rate({rec({}, {})}), NoEntities);
    r.sanitized_text.reset();
    EXPECT_THROW(privacy_hiding_rate({r}), MissingScores);
}

TEST(Metrics, EmptyRun) {
    EXPECT_THROW(subset_accuracy({}), EmptyRun);
    EXPECT_THROW(hamming_accuracy({}, 3), EmptyRun);
    EXPECT_THROW(multi_label_f1({}), EmptyRun);
    EXPECT_THROW(binary_metrics({}), EmptyRun);
    EXPECT_THROW(evaluate_run({}, policy::builtin_taxonomy()), EmptyRun);
}

TEST(BruteForce, LabelMatrices) {
    for (unsigned N = 1; N <= 3; ++N) {
        for (unsigned L = 1; L <= 3; ++L) {
            const auto names = labels(L);
            for_each_run(N, L, [&](const std::vector<PredictionRecord>& run, const std::vector<oracle::BitRecord>& bits) {
                const double subset = subset_accuracy(run);
                const double hamming = hamming_accuracy(run, L);
                ASSERT_TRUE(oracle::close(subset, oracle::subset_oracle(bits)));
                ASSERT_TRUE(oracle::close(hamming, oracle::hamming_oracle(bits, L)));
                ASSERT_LE(subset, hamming + 1e-12);
                ASSERT_TRUE(oracle::close(multi_label_f1(run, F1Averaging::Example), oracle::example_f1_oracle(bits)));
                ASSERT_TRUE(oracle::close(multi_label_f1(run, F1Averaging::Micro), oracle::micro_f1_oracle(bits)));
                ASSERT_TRUE(
                    oracle::close(multi_label_f1(run, F1Averaging::Macro, names), oracle::macro_f1_oracle(bits, L)));
            });
        }
    }
}

TEST(BruteForce, AveragePrecisionOrderings) {
    for (unsigned N = 1; N <= 6; ++N) {
        std::size_t score_codes = 1;
        for (unsigned i = 0; i < N; ++i) score_codes *= N;
        std::vector<double> scores(N);
        std::vector<bool> pos(N);
        for (std::size_t sc = 0; sc < score_codes; ++sc) {
            std::size_t c = sc;
            for (unsigned i = 0; i < N; ++i) {
                scores[i] = static_cast<double>(c % N);
                c /= N;
            }
            for (unsigned m = 1; m < (1u << N); ++m) {
                for (unsigned i = 0; i < N; ++i) pos[i] = (m >> i) & 1u;
                ASSERT_TRUE(oracle::close(average_precision(scores, pos), oracle::ap_oracle(scores, pos)));
            }
        }
    }
}

TEST(BruteForce, TiedScoresGivePrevalence) {
    for (unsigned N = 1; N <= 6; ++N) {
        const std::vector<double> scores(N, 0.5);
        std::vector<bool> pos(N);
        for (unsigned m = 1; m < (1u << N); ++m) {
            for (unsigned i = 0; i < N; ++i) pos[i] = (m >> i) & 1u;
            EXPECT_TRUE(oracle::close(average_precision(scores, pos),
                                      static_cast<double>(oracle::popcount(m)) / N));
        }
    }
}

TEST(Property, SubsetNeverExceedsHammingOnRandomRuns) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 10000; ++i) {
        const unsigned L = 1 + rng() % 6;
        const unsigned N = 1 + rng() % 8;
        std::vector<PredictionRecord> run;
        for (unsigned k = 0; k < N; ++k)
            run.push_back(rec(oracle::codes_of(rng() % (1u << L)), oracle::codes_of(rng() % (1u << L))));
        const double s = subset_accuracy(run), h = hamming_accuracy(run, L);
        ASSERT_LE(s, h + 1e-12);
        ASSERT_GE(s, 0.0);
        ASSERT_LE(h, 1.0);
        std::shuffle(run.begin(), run.end(), rng);
        ASSERT_DOUBLE_EQ(hamming_accuracy(run, L), h);
    }
}

TEST(Evaluate, OmitsMissingInputs) {
    const auto rep = evaluate_run({rec({"T1"}, {"T1"}), rec({}, {})}, policy::builtin_taxonomy());
    EXPECT_DOUBLE_EQ(rep.safety_accuracy, 1.0);
    EXPECT_DOUBLE_EQ(rep.category_hamming, 1.0);
    EXPECT_EQ(rep.label_count, 6u);
    EXPECT_FALSE(rep.safety_auprc);
    EXPECT_FALSE(rep.category_auprc);
    EXPECT_FALSE(rep.phr);
    ASSERT_EQ(rep.omitted.size(), 3u);
    EXPECT_TRUE(rep.omitted[0].starts_with("safety.auprc"));
    const auto j = to_json(rep);
    EXPECT_TRUE(j["safety"]["auprc"].is_null());
    EXPECT_EQ(j["counts"]["records"], 2);
    EXPECT_EQ(j["counts"]["positives"], 1);
}

TEST(Evaluate, SingleRecordFullyScored) {
    auto r = rec({"T1"}, {"T1"});
    r.truth.entities = {"a@b.co"};
    r.unsafe_score = 1.0;
    r.category_scores = {{"T1", 1.0}};
    r.sanitized_text = "mail q@z.pp";
    const auto rep = evaluate_run({r}, policy::builtin_taxonomy());
    EXPECT_TRUE(rep.omitted.empty());
    EXPECT_EQ(rep.safety_auprc, 1.0);
    EXPECT_EQ(rep.category_auprc, 1.0);
    EXPECT_EQ(rep.phr, 1.0);
    // Codes outside the catalog widen the label universe.
    const auto wide = evaluate_run({rec({"T1"}, {"X9"})}, policy::builtin_taxonomy());
    EXPECT_EQ(wide.label_count, 7u);
    EXPECT_DOUBLE_EQ(wide.category_hamming, 5.0 / 7.0);
}

TEST(Evaluate, CsvRow) {
    auto r = rec({"T1"}, {"T1"});
    r.truth.entities = {"a@b.co"};
    r.sanitized_text = "nothing";
    const auto rep = evaluate_run({r, rec({}, {"T2"})}, policy::builtin_taxonomy());
    EXPECT_EQ(std::count(kCsvHeader.begin(), kCsvHeader.end(), ','), 7);
    EXPECT_EQ(to_csv_row(rep), "0.5000,0.6667,,0.9167,0.5000,0.5000,,1.0000");
}

TEST(Records, JsonRoundTripAndErrors) {
    auto r = rec({"T1", "T6"}, {"T1"});
    r.truth.entities = {"a@b.co", "150,000"};
    r.predicted_entities = {"a@b.co"};
    r.unsafe_score = 0.75;
    r.category_scores = {{"T1", 0.9}, {"T6", 0.2}};
    r.sanitized_text = "x";
    std::stringstream in;
    in << to_json(r).dump() << "\n\n" << to_json(rec({}, {})).dump() << "\n";
    const auto loaded = load_records(in);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[0].truth, r.truth);
    EXPECT_EQ(loaded[0].predicted_categories, r.predicted_categories);
    EXPECT_EQ(loaded[0].predicted_entities, r.predicted_entities);
    EXPECT_EQ(loaded[0].unsafe_score, r.unsafe_score);
    EXPECT_EQ(loaded[0].category_scores, r.category_scores);
    EXPECT_EQ(loaded[0].sanitized_text, r.sanitized_text);

    std::stringstream bad("\n{\"truth\": {\"safety\": \"safe\"}}\n");
    try {
        load_records(bad);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_TRUE(std::string(e.what()).starts_with("line 2")) << e.what();
    }
    std::stringstream score(
        R"({"truth":{"safety":"safe"},"predicted":{"safety":"safe"},"unsafe_score":1.5})");
    EXPECT_THROW(load_records(score), SchemaError);
    std::stringstream garbage("{not json");
    EXPECT_THROW(load_records(garbage), SchemaError);
}
