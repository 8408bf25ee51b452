#include "privgate/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace privgate;
    CLI::App app{"privgate: privacy gateway for chat-completion traffic"};
    app.require_subcommand(1);

    cli::ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Run the gateway (exit 2 on config error, 3 on key error)");
    serve->add_option("-c,--config", serve_args.config, "Gateway config file (JSON)")->required();
    serve->add_option("--listen-host", serve_args.listen_host, "Override listen.host");
    serve->add_option("--listen-port", serve_args.listen_port, "Override listen.port");
    serve->add_option("--upstream", serve_args.upstream, "Override upstream.url");

    cli::ScanArgs scan_args;
    auto* scan = app.add_subcommand("scan", "Detect sensitive entities; reads stdin without --text/--file");
    scan->add_option("-t,--text", scan_args.text, "Text to scan");
    scan->add_option("-f,--file", scan_args.file, "File to scan");
    scan->add_option("--catalog", scan_args.catalog, "Catalog path or builtin:taxonomy");
    scan->add_option("--format", scan_args.format, "json or sft")->check(CLI::IsMember({"json", "sft"}));

    cli::CryptArgs crypt_args;
    auto* crypt = app.add_subcommand("crypt", "Format-preserving encrypt/decrypt one entity (exit 4 on FPE errors)");
    crypt->add_option("direction", crypt_args.direction, "encrypt or decrypt")
        ->required()
        ->check(CLI::IsMember({"encrypt", "decrypt"}));
    crypt->add_option("entity", crypt_args.entity, "Entity text")->required();
    crypt->add_option("--category", crypt_args.category, "Category code selecting the profile");
    crypt->add_option("--profile", crypt_args.profile, "Profile id (digits, alnum, email, or catalog-defined)");
    crypt->add_option("--key-hex", crypt_args.key_hex, "Key as hex (16, 24 or 32 bytes)");
    crypt->add_option("--key-env", crypt_args.key_env, "Environment variable holding the hex key");
    crypt->add_option("--key-file", crypt_args.key_file, "File holding the hex key");
    crypt->add_option("--tweak", crypt_args.tweak_hex, "7-byte tweak as 14 hex digits")->required();
    crypt->add_option("--catalog", crypt_args.catalog, "Catalog path or builtin:taxonomy");

    cli::ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "Score model outputs (JSONL in, reward breakdown JSONL out)");
    score->add_option("-i,--input", score_args.input, "Input JSONL (default stdin)");
    score->add_option("-m,--mode", score_args.mode, "full, stage1, stage2 or stage3")
        ->check(CLI::IsMember({"full", "stage1", "stage2", "stage3"}));
    score->add_option("--eos", score_args.eos, "Accepted end-of-sequence marker(s) after </answer>");

    cli::EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Evaluate prediction records (JSONL) into a metrics report");
    eval->add_option("-i,--input", eval_args.input, "Input JSONL (default stdin)");
    eval->add_option("--catalog", eval_args.catalog, "Catalog path or builtin:taxonomy");
    eval->add_option("--averaging", eval_args.averaging, "Multi-label F1 averaging: example, micro or macro")
        ->check(CLI::IsMember({"example", "micro", "macro"}));
    eval->add_flag("--csv", eval_args.csv, "Print a CSV header and row instead of JSON");

    cli::GenArgs gen_args;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic SFT (or RFT) corpus");
    gen->add_option("--catalog", gen_args.catalog, "Catalog path or builtin:taxonomy");
    gen->add_option("--counts", gen_args.counts, "Category weights, e.g. T1=567,T2=244");
    gen->add_option("--total", gen_args.total, "Total samples with the default safe/multi-label mix");
    gen->add_option("--safe", gen_args.safe, "Safe samples");
    gen->add_option("--unsafe", gen_args.unsafe, "Unsafe samples");
    gen->add_option("--multi", gen_args.multi, "Unsafe samples with two or more categories");
    gen->add_option("--seed", gen_args.seed, "Generator seed");
    gen->add_option("--format", gen_args.format, "sft or rft")->check(CLI::IsMember({"sft", "rft"}));
    gen->add_option("--template", gen_args.template_kind, "rft-zero-shot or rft-few-shot")
        ->check(CLI::IsMember({"rft-zero-shot", "rft-few-shot"}));
    gen->add_option("--split", gen_args.split, "extra_info.split value for RFT records");

    cli::PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "Run detector and anonymizer over SFT JSONL, emit prediction records");
    predict->add_option("-i,--input", predict_args.input, "SFT JSONL (default stdin)");
    predict->add_option("--catalog", predict_args.catalog, "Catalog path or builtin:taxonomy");
    predict->add_option("--key-hex", predict_args.key_hex, "Key as hex (random when omitted)");

    CLI11_PARSE(app, argc, argv);

    if (*serve) return cli::serve(serve_args, std::cout, std::cerr);
    if (*scan) return cli::scan(scan_args, std::cin, std::cout, std::cerr);
    if (*crypt) return cli::crypt(crypt_args, std::cout, std::cerr);
    if (*score) return cli::score(score_args, std::cin, std::cout, std::cerr);
    if (*eval) return cli::eval(eval_args, std::cin, std::cout, std::cerr);
    if (*gen) return cli::gen_data(gen_args, std::cout, std::cerr);
    if (*predict) return cli::predict(predict_args, std::cin, std::cout, std::cerr);
    return cli::kFailure;
}
