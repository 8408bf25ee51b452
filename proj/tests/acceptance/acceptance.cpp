// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Timing limits are part of each check.

#include "privgate/cli.hpp"
#include "privgate/dataset.hpp"
#include "privgate/dlms_parse.hpp"
#include "privgate/fpe/ff3.hpp"
#include "privgate/fpe/format.hpp"
#include "privgate/gateway.hpp"
#include "privgate/metrics.hpp"
#include "privgate/reward.hpp"

#include "../ff3_1_vectors.hpp"
#include "../oracles.hpp"
#include "../test_support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace privgate;
using nlohmann::json;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void check(int id, const std::string& name, double limit_s, const std::function<Outcome()>& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (limit_s > 0 && secs >= limit_s) {
        o.ok = false;
        o.detail += (o.detail.empty() ? "" : "; ") + std::string("over time limit");
    }
    char timing[64];
    if (limit_s > 0)
        std::snprintf(timing, sizeof timing, "%.3f s (limit %.0f s)", secs, limit_s);
    else
        std::snprintf(timing, sizeof timing, "%.3f s", secs);
    std::cout << (o.ok ? "PASS" : "FAIL") << "  [" << id << "] " << name << "  " << timing;
    if (!o.detail.empty()) std::cout << "  " << o.detail;
    std::cout << std::endl;
    failures += !o.ok;
}

const std::string kKeyHex = "2DE79D232DF5585D68CE47882AE256D6";

fpe::Ff3Key key() { return fpe::Ff3Key::from_hex(kKeyHex, "k1"); }

std::string sprint(const char* fmt, double a, double b = 0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return buf;
}

// --- 1 ---------------------------------------------------------------------

Outcome ff3_vectors() {
    std::size_t n = 0;
    for (const auto& v : kFf31Vectors) {
        const auto k = fpe::Ff3Key::from_hex(std::string(v.key));
        const auto t = fpe::Tweak::from_hex(std::string(v.tweak));
        const fpe::Alphabet a{std::string(v.alphabet)};
        if (fpe::ff3_encrypt(k, t, a, std::string(v.plaintext)) != v.ciphertext)
            return {false, "encrypt mismatch on vector " + std::to_string(n)};
        if (fpe::ff3_decrypt(k, t, a, std::string(v.ciphertext)) != v.plaintext)
            return {false, "decrypt mismatch on vector " + std::to_string(n)};
        ++n;
    }
    return {true, std::to_string(n) + " vectors"};
}

// --- 2 ---------------------------------------------------------------------

Outcome ff3_round_trip() {
    std::mt19937_64 rng(2024);
    const std::vector<fpe::Alphabet> alphabets = {fpe::alphabets::digits(), fpe::alphabets::letters(),
                                                  fpe::alphabets::alnum()};
    for (const auto& a : alphabets) {
        std::string symbols;
        for (std::uint32_t i = 0; i < a.radix(); ++i) symbols += static_cast<char>(a.symbol(i));
        const auto [lo, hi] = fpe::domain_limits(a.radix());
        const std::size_t top = std::min<std::size_t>(hi, 40);
        for (int i = 0; i < 10000; ++i) {
            const fpe::Ff3Key k(testsupport::random_bytes(rng, 16 + 8 * (rng() % 3)), "rt");
            const auto t = fpe::Tweak::from_bytes(testsupport::random_bytes(rng, 7));
            const auto len = lo + rng() % (top - lo + 1);
            const auto x = testsupport::random_from(rng, symbols, len);
            const auto y = fpe::ff3_encrypt(k, t, a, x);
            if (y.size() != x.size() || fpe::ff3_decrypt(k, t, a, y) != x)
                return {false, "radix " + std::to_string(a.radix()) + " failed on " + x};
        }
    }
    return {true, "3 x 10000 cases"};
}

// --- 3 ---------------------------------------------------------------------

Outcome format_preservation() {
    const auto& catalog = policy::builtin_taxonomy();
    const auto registry = catalog.profile_registry();
    const std::vector<std::pair<std::string, std::string>> table = {
        {"T1", "tinavang@support.org"}, {"T2", "B 987 654 3"},           {"T3", "+86 13945093743"},
        {"T4", "(853) 3406-2802"},      {"T5", "DE89370400440532013000"}, {"T6", "1,452,500"}};
    auto one = [&](const std::string& code, const std::string& plain, std::uint64_t n) -> std::optional<std::string> {
        const auto& profile = registry.get(catalog.find_category(code)->fpe_profile);
        const auto tweak = anonymizer::derive_tweak("acceptance", code, n);
        const auto ct = fpe::encrypt_preserving(plain, profile, key(), tweak);
        if (auto v = oracle::format_violation(plain, ct, profile)) return code + " " + plain + ": " + *v;
        if (fpe::decrypt_preserving(ct, profile, key(), tweak) != plain) return code + " " + plain + ": no round trip";
        return std::nullopt;
    };
    for (const auto& [code, plain] : table)
        if (auto e = one(code, plain, 0)) return {false, *e};
    std::size_t n = table.size();
    for (const auto& code : catalog.category_codes()) {
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            if (auto e = one(code, dataset::generate_entity(code, 100000 + seed), seed)) return {false, *e};
            ++n;
        }
    }
    return {true, std::to_string(n) + " entities"};
}

// --- 4 ---------------------------------------------------------------------

Outcome end_to_end() {
    testsupport::MockChatServer upstream;
    testsupport::TempDir dir;
    const auto cfg = gateway::load_config(json{{"upstream", {{"url", upstream.url()}}},
                                               {"listen", {{"port", 0}}},
                                               {"audit_log", dir.file("audit.jsonl")},
                                               {"key", {{"file", testsupport::write_file(dir.file("key"), kKeyHex)}}}});
    auto gw = gateway::build_gateway(cfg);
    gateway::BackgroundServer server(*gw, "127.0.0.1");
    httplib::Client client("127.0.0.1", server.port());

    const auto corpus =
        dataset::generate_synthetic_corpus(policy::builtin_taxonomy(), dataset::CorpusSpec::with_total(1000, 77));
    std::size_t total = 0, hidden = 0, restored = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& s = corpus[i];
        const auto body = json{{"model", "mock"}, {"messages", {{{"role", "user"}, {"content", s.message}}}}}.dump();
        auto res = client.Post(gateway::kChatPath, body, "application/json");
        if (!res || res->status != 200) return {false, "request " + std::to_string(i) + " failed"};
        const auto received = upstream.bodies().at(i);
        for (const auto& e : s.entities) {
            ++total;
            hidden += received.find(e) == std::string::npos;
        }
        const auto content = json::parse(res->body)["choices"][0]["message"]["content"].get<std::string>();
        restored += content == s.message;
    }
    const double phr = static_cast<double>(hidden) / static_cast<double>(total);
    const bool ok = phr == 1.0 && restored == corpus.size();
    return {ok, sprint("PHR %.4f", phr) + ", restored " + std::to_string(restored) + "/" +
                    std::to_string(corpus.size()) + ", " + std::to_string(total) + " entities"};
}

// --- 5 ---------------------------------------------------------------------

Outcome reward_golden() {
    const auto table = oracle::reward_golden_table();
    if (table.size() < 30) return {false, "fewer than 30 cases"};
    std::set<int> totals;
    std::set<reward::Mode> modes;
    for (const auto& c : table) {
        const auto r = reward::score_total(c.output, c.truth, c.mode);
        if (r.r_fmt != c.fmt || r.r_safety != c.safety || r.r_cat != c.cat || r.r_ent != c.ent || r.r_total != c.total)
            return {false, "mismatch on " + c.name};
        totals.insert(c.total);
        modes.insert(c.mode);
    }
    for (int t : {9, 6, -1, -5})
        if (!totals.contains(t)) return {false, "total " + std::to_string(t) + " not covered"};
    if (modes.size() != 4) return {false, "not every mode covered"};
    return {true, std::to_string(table.size()) + " cases"};
}

// --- 6 ---------------------------------------------------------------------

Outcome reward_bounds() {
    oracle::RewardFuzzer fuzz(31337);
    for (int i = 0; i < 100000; ++i) {
        const auto s = fuzz.next();
        const auto r = reward::score_total(s.output, s.truth, s.mode);
        const auto [lo, hi] = oracle::reward_bounds(s.mode);
        if (r.r_total < lo || r.r_total > hi || r.r_total != r.r_fmt + r.r_safety + r.r_cat + r.r_ent)
            return {false, "out of bounds: " + s.output};
    }
    return {true, "100000 cases"};
}

// --- 7 ---------------------------------------------------------------------

Outcome parser() {
    const auto& tax = policy::builtin_taxonomy();
    const auto& pol = policy::builtin_policies();
    struct Golden {
        std::string output;
        const policy::PolicyCatalog* catalog;
        Safety safety;
        CodeSet codes;
        std::vector<std::string> entities;
    };
    const std::vector<Golden> goldens = {
        {oracle::appendix_safe_output(), &tax, Safety::Safe, {}, {}},
        {oracle::appendix_phone_output(), &tax, Safety::Unsafe, {"T3"}, {"+853-3406-2802"}},
        {oracle::policy_output_us(), &pol, Safety::Unsafe, {"POL02"}, {"+1 (525) 931-4508"}},
        {oracle::policy_output_cn(), &pol, Safety::Unsafe, {"POL02"}, {"+86 138 0013 8000"}},
    };
    for (std::size_t i = 0; i < goldens.size(); ++i) {
        const auto& g = goldens[i];
        const auto out = dlms::parse_rft_output(g.output, {}, g.catalog);
        if (!out.format_valid || !out.answer || out.answer->safety != g.safety || out.answer->categories != g.codes ||
            out.answer->entities != g.entities || !out.answer->unknown_codes.empty())
            return {false, "golden " + std::to_string(i) + " mismatch"};
    }
    oracle::TagMutator gen(4242);
    std::size_t valid = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto s = gen.next();
        const bool expected = oracle::reference_valid(s);
        if (dlms::parse_rft_output(s).format_valid != expected) return {false, "disagreement on: " + s};
        valid += expected;
    }
    return {true, "4 goldens, 10000 mutations (" + std::to_string(valid) + " valid)"};
}

// --- 8 ---------------------------------------------------------------------

Outcome metrics_brute_force() {
    using metrics::PredictionRecord;
    auto rec = [](const CodeSet& t, const CodeSet& p) {
        PredictionRecord r;
        r.truth.safety = t.empty() ? Safety::Safe : Safety::Unsafe;
        r.truth.categories = t;
        r.predicted_categories = p;
        return r;
    };
    std::size_t runs = 0;
    for (unsigned N = 1; N <= 3; ++N) {
        for (unsigned L = 1; L <= 3; ++L) {
            const unsigned cells = 1u << L;
            std::vector<std::string> names;
            for (unsigned l = 0; l < L; ++l) names.push_back(oracle::label_name(l));
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
                    run[i] = rec(oracle::codes_of(bits[i].truth), oracle::codes_of(bits[i].pred));
                }
                const double s = metrics::subset_accuracy(run), h = metrics::hamming_accuracy(run, L);
                if (!oracle::close(s, oracle::subset_oracle(bits)) || !oracle::close(h, oracle::hamming_oracle(bits, L)) ||
                    s > h + 1e-12 ||
                    !oracle::close(metrics::multi_label_f1(run, metrics::F1Averaging::Example),
                                   oracle::example_f1_oracle(bits)) ||
                    !oracle::close(metrics::multi_label_f1(run, metrics::F1Averaging::Micro),
                                   oracle::micro_f1_oracle(bits)) ||
                    !oracle::close(metrics::multi_label_f1(run, metrics::F1Averaging::Macro, names),
                                   oracle::macro_f1_oracle(bits, L)))
                    return {false, "label-matrix mismatch at N=" + std::to_string(N) + " L=" + std::to_string(L)};
                ++runs;
            }
        }
    }
    std::size_t orderings = 0;
    for (unsigned N = 1; N <= 6; ++N) {
        std::size_t codes = 1;
        for (unsigned i = 0; i < N; ++i) codes *= N;
        std::vector<double> scores(N);
        std::vector<bool> pos(N);
        for (std::size_t sc = 0; sc < codes; ++sc) {
            std::size_t c = sc;
            for (unsigned i = 0; i < N; ++i) {
                scores[i] = static_cast<double>(c % N);
                c /= N;
            }
            for (unsigned m = 1; m < (1u << N); ++m) {
                for (unsigned i = 0; i < N; ++i) pos[i] = (m >> i) & 1u;
                if (!oracle::close(metrics::average_precision(scores, pos), oracle::ap_oracle(scores, pos)))
                    return {false, "AP mismatch at N=" + std::to_string(N)};
                ++orderings;
            }
        }
    }
    std::mt19937_64 rng(99);
    for (int i = 0; i < 10000; ++i) {
        const unsigned L = 1 + rng() % 6, N = 1 + rng() % 8;
        std::vector<PredictionRecord> run;
        for (unsigned k = 0; k < N; ++k)
            run.push_back(rec(oracle::codes_of(rng() % (1u << L)), oracle::codes_of(rng() % (1u << L))));
        if (metrics::subset_accuracy(run) > metrics::hamming_accuracy(run, L) + 1e-12)
            return {false, "subset exceeded hamming on a random run"};
    }
    return {true, std::to_string(runs) + " label matrices, " + std::to_string(orderings) +
                      " scored labelings, 10000 random runs"};
}

// --- 9 ---------------------------------------------------------------------

Outcome closed_loop() {
    std::ostringstream corpus, predictions, report, err;
    cli::GenArgs gen;
    gen.safe = 452;
    gen.unsafe = 1090;
    gen.multi = 216;
    gen.seed = 2025;
    if (cli::gen_data(gen, corpus, err) != 0) return {false, "gen-data: " + err.str()};
    std::istringstream corpus_in(corpus.str());
    cli::PredictArgs pa;
    pa.key_hex = kKeyHex;
    if (cli::predict(pa, corpus_in, predictions, err) != 0) return {false, "predict: " + err.str()};
    std::istringstream pred_in(predictions.str());
    cli::EvalArgs ea;
    if (cli::eval(ea, pred_in, report, err) != 0) return {false, "eval: " + err.str()};
    const auto j = json::parse(report.str());
    const double acc = j["safety"]["accuracy"].get<double>();
    const double phr = j["entity"]["phr"].get<double>();
    return {acc == 1.0 && phr == 1.0,
            sprint("safety accuracy %.4f, PHR %.4f", acc, phr) + " over " +
                std::to_string(j["counts"]["records"].get<std::size_t>()) + " records"};
}

}  // namespace

int main() {
    check(1, "FF3-1 published vectors", 1, ff3_vectors);
    check(2, "FF3-1 round trip, radix 10/52/62", 10, ff3_round_trip);
    check(3, "format preservation, sample table + 1000 per category", 0, format_preservation);
    check(4, "gateway end to end, 1000 samples, echo upstream", 30, end_to_end);
    check(5, "reward golden table", 0, reward_golden);
    check(6, "reward bounds, 100000 fuzz cases", 10, reward_bounds);
    check(7, "answer parser goldens + tag mutations", 0, parser);
    check(8, "metrics exhaustive oracles", 0, metrics_brute_force);
    check(9, "closed-loop eval (gen-data | predict | eval)", 0, closed_loop);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
