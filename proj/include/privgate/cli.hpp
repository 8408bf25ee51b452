#pragma once

// Command implementations behind the privgate executable. Each returns a
// process exit code and talks only through the given streams.

#include "privgate/anonymizer.hpp"
#include "privgate/dataset.hpp"
#include "privgate/detector.hpp"
#include "privgate/dlms_parse.hpp"
#include "privgate/fpe/format.hpp"
#include "privgate/gateway.hpp"
#include "privgate/metrics.hpp"
#include "privgate/policy.hpp"
#include "privgate/reward.hpp"

#include <json.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

namespace privgate::cli {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kKeyError = 3, kFpeError = 4 };

inline std::string read_all(std::istream& in) {
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    return read_all(in);
}

// --- scan ------------------------------------------------------------------

struct ScanArgs {
    std::optional<std::string> text;
    std::optional<std::string> file;
    std::string catalog = "builtin:taxonomy";
    std::string format = "json";  // json | sft
};

inline int scan(const ScanArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
    try {
        const auto catalog = gateway::load_catalog_source(a.catalog);
        std::string input = a.text ? *a.text : a.file ? read_file(*a.file) : read_all(in);
        if (!a.text && !input.empty() && input.back() == '\n') input.pop_back();
        const auto verdict = detector::Detector(catalog).detect(input);
        if (a.format == "sft")
            out << dlms::format_answer(verdict) << '\n';
        else
            out << to_json(verdict).dump() << '\n';
        return kOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

// --- crypt -----------------------------------------------------------------

struct CryptArgs {
    std::string direction;  // encrypt | decrypt
    std::string entity;
    std::string category;  // picks the category's profile
    std::string profile;   // overrides category
    std::string key_hex;
    std::string key_env;
    std::string key_file;
    std::string tweak_hex;
    std::string catalog = "builtin:taxonomy";
};

inline fpe::Ff3Key key_from_args(const std::string& hex, const std::string& env, const std::string& file) {
    if (!hex.empty()) return fpe::Ff3Key::from_hex(hex, "cli");
    if (!file.empty()) return fpe::key_from_file(file, "cli");
    if (!env.empty()) return fpe::key_from_env(env, "cli");
    throw KeyError("no key given (use --key-hex, --key-file or --key-env)");
}

inline int crypt(const CryptArgs& a, std::ostream& out, std::ostream& err) {
    try {
        const auto catalog = gateway::load_catalog_source(a.catalog);
        const auto key = key_from_args(a.key_hex, a.key_env, a.key_file);
        fpe::Tweak tweak;
        try {
            tweak = fpe::Tweak::from_hex(a.tweak_hex);
        } catch (const std::exception& e) {
            err << "error: tweak must be 14 hex digits\n";
            return kFailure;
        }
        std::string profile_id = a.profile;
        if (profile_id.empty()) {
            if (a.category.empty()) {
                err << "error: give --category or --profile\n";
                return kFailure;
            }
            const auto* c = catalog.find_category(a.category);
            profile_id = c ? c->fpe_profile : policy::default_profile_for(a.category);
        }
        const auto registry = catalog.profile_registry();
        if (!registry.contains(profile_id)) {
            err << "error: unknown profile " << profile_id << '\n';
            return kFailure;
        }
        const auto& profile = registry.get(profile_id);
        if (a.direction == "encrypt")
            out << fpe::encrypt_preserving(a.entity, profile, key, tweak) << '\n';
        else if (a.direction == "decrypt")
            out << fpe::decrypt_preserving(a.entity, profile, key, tweak) << '\n';
        else {
            err << "error: direction must be encrypt or decrypt\n";
            return kFailure;
        }
        return kOk;
    } catch (const FormatTooShort& e) {
        err << "FormatTooShort: " << e.what() << '\n';
        return kFpeError;
    } catch (const FpeError& e) {
        err << "error: " << e.what() << '\n';
        return kFpeError;
    } catch (const KeyError& e) {
        err << "error: " << e.what() << '\n';
        return kKeyError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

// --- score -----------------------------------------------------------------

struct ScoreArgs {
    std::optional<std::string> input;
    std::string mode = "full";
    std::vector<std::string> eos;
};

inline int score(const ScoreArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
    const auto mode = reward::parse_mode(a.mode);
    if (!mode) {
        err << "error: mode must be full, stage1, stage2 or stage3\n";
        return kFailure;
    }
    dlms::RftParseOptions opts;
    if (!a.eos.empty()) opts.eos_markers = a.eos;
    if (a.input) {
        std::ifstream f(*a.input);
        if (!f) {
            err << "error: cannot open " << *a.input << '\n';
            return kFailure;
        }
        reward::score_stream(f, out, *mode, opts);
    } else {
        reward::score_stream(in, out, *mode, opts);
    }
    return kOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    std::optional<std::string> input;
    std::string catalog = "builtin:taxonomy";
    std::string averaging = "example";
    bool csv = false;
};

inline int eval(const EvalArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
    try {
        const auto avg = metrics::parse_averaging(a.averaging);
        if (!avg) {
            err << "error: averaging must be example, micro or macro\n";
            return kFailure;
        }
        const auto catalog = gateway::load_catalog_source(a.catalog);
        std::vector<metrics::PredictionRecord> records;
        if (a.input) {
            std::ifstream f(*a.input);
            if (!f) throw ConfigError("cannot open " + *a.input);
            records = metrics::load_records(f);
        } else {
            records = metrics::load_records(in);
        }
        const auto report = metrics::evaluate_run(records, catalog, *avg);
        if (a.csv)
            out << metrics::kCsvHeader << '\n' << metrics::to_csv_row(report) << '\n';
        else
            out << metrics::to_json(report).dump(2) << '\n';
        return kOk;
    } catch (const EmptyRun& e) {
        err << "EmptyRun: " << e.what() << '\n';
        return kFailure;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

// --- gen-data --------------------------------------------------------------

struct GenArgs {
    std::string catalog = "builtin:taxonomy";
    std::optional<std::string> counts;  // "T1=567,T2=244,..."
    std::optional<std::size_t> total;
    std::optional<std::size_t> safe, unsafe, multi;
    std::uint64_t seed = 7;
    std::string format = "sft";  // sft | rft
    std::string template_kind = "rft-few-shot";
    std::string split = "train";
};

inline std::map<std::string, double> parse_counts(const std::string& s) {
    std::map<std::string, double> out;
    for (const auto item : text::split(s, ',')) {
        const auto t = text::trim(item);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw SchemaError("count '" + std::string(t) + "' is not CODE=N");
        const auto code = text::ascii_upper(text::trim(t.substr(0, eq)));
        try {
            out[code] = std::stod(std::string(t.substr(eq + 1)));
        } catch (const std::exception&) {
            throw SchemaError("count for " + code + " is not a number");
        }
    }
    return out;
}

inline int gen_data(const GenArgs& a, std::ostream& out, std::ostream& err) {
    try {
        const auto catalog = gateway::load_catalog_source(a.catalog);
        auto spec = a.total ? dataset::CorpusSpec::with_total(*a.total, a.seed) : dataset::CorpusSpec{};
        spec.seed = a.seed;
        if (a.safe) spec.safe = *a.safe;
        if (a.unsafe) spec.unsafe = *a.unsafe;
        if (a.multi) spec.multi_label = *a.multi;
        if (a.counts) spec.category_weights = parse_counts(*a.counts);
        const auto samples = dataset::generate_synthetic_corpus(catalog, spec);
        if (a.format == "sft") {
            dataset::write_jsonl(out, samples);
        } else if (a.format == "rft") {
            const auto kind = a.template_kind == "rft-zero-shot" ? dlms::PromptTemplateKind::rft_zero_shot()
                                                                 : dlms::PromptTemplateKind::rft_few_shot();
            for (const auto& r : dataset::convert_sft_to_rft(samples, catalog, kind, a.split))
                out << dataset::to_json(r).dump() << '\n';
        } else {
            err << "error: format must be sft or rft\n";
            return kFailure;
        }
        return kOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

// --- predict ---------------------------------------------------------------

struct PredictArgs {
    std::optional<std::string> input;
    std::string catalog = "builtin:taxonomy";
    std::string key_hex;  // random key when empty
};

/// Runs the pattern detector and the anonymizer over SFT samples and emits
/// prediction records (hard-label scores, sanitized text) for `eval`.
inline int predict(const PredictArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
    try {
        const auto catalog = gateway::load_catalog_source(a.catalog);
        const auto key = a.key_hex.empty() ? fpe::Ff3Key(crypto::random_bytes(32), "ephemeral")
                                           : fpe::Ff3Key::from_hex(a.key_hex, "cli");
        std::vector<dataset::SftSample> samples;
        if (a.input)
            samples = dataset::load_sft_dataset(*a.input);
        else
            samples = dataset::load_sft_dataset(in);
        const detector::Detector det(catalog);
        const anonymizer::Anonymizer anon(catalog, key);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            const auto v = det.detect(s.message);
            metrics::PredictionRecord r;
            r.truth = s.ground_truth();
            r.predicted_safety = v.safety;
            r.predicted_categories = v.categories;
            for (const auto& e : v.entities)
                if (std::find(r.predicted_entities.begin(), r.predicted_entities.end(), e.text) ==
                    r.predicted_entities.end())
                    r.predicted_entities.push_back(e.text);
            r.unsafe_score = v.safety == Safety::Unsafe ? 1.0 : 0.0;
            for (const auto& c : v.categories) r.category_scores[c] = 1.0;
            if (r.category_scores.empty())
                for (const auto& c : catalog.categories) r.category_scores[c.code] = 0.0;
            r.sanitized_text = v.safety == Safety::Unsafe
                                   ? anon.anonymize(s.message, v, "predict-" + std::to_string(i)).sanitized
                                   : s.message;
            out << metrics::to_json(r).dump() << '\n';
        }
        return kOk;
    } catch (const KeyError& e) {
        err << "error: " << e.what() << '\n';
        return kKeyError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

// --- serve -----------------------------------------------------------------

struct ServeArgs {
    std::string config;
    std::optional<std::string> listen_host;
    std::optional<int> listen_port;
    std::optional<std::string> upstream;
};

namespace detail {
inline std::atomic<httplib::Server*> g_server{nullptr};
inline void on_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}
}  // namespace detail

inline int serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
    std::unique_ptr<gateway::Gateway> gw;
    gateway::GatewayConfig cfg;
    try {
        std::ifstream in(a.config);
        if (!in) throw ConfigError("cannot open config file " + a.config);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config file " + a.config + ": " + e.what());
        }
        if (a.listen_host) doc["listen"]["host"] = *a.listen_host;
        if (a.listen_port) doc["listen"]["port"] = *a.listen_port;
        if (a.upstream) doc["upstream"]["url"] = *a.upstream;
        cfg = gateway::load_config(doc);
        gw = gateway::build_gateway(cfg);
    } catch (const KeyError& e) {
        err << "key error: " << e.what() << '\n';
        return kKeyError;
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    httplib::Server server;
    gateway::mount(server, *gw);
    if (!server.bind_to_port(cfg.listen_host, cfg.listen_port)) {
        err << "config error: cannot listen on " << cfg.listen_host << ':' << cfg.listen_port << '\n';
        return kConfigError;
    }
    detail::g_server = &server;
    std::signal(SIGINT, detail::on_signal);
    std::signal(SIGTERM, detail::on_signal);
    out << "privgate listening on http://" << cfg.listen_host << ':' << cfg.listen_port << gateway::kChatPath
        << " (detector: " << (cfg.detector_mode == gateway::DetectorMode::BuiltinPattern ? "pattern" : "remote")
        << ", upstream: " << cfg.upstream_url << ")" << std::endl;
    server.listen_after_bind();
    detail::g_server = nullptr;
    return kOk;
}

}  // namespace privgate::cli
