// slmsql: dataset construction, CSC generation, evaluation and the reward
// service behind one binary.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "slmsql/error.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string flag_name(const std::string& key) {
    std::string out = "--" + key;
    for (auto& c : out) {
        if (c == '_') c = '-';
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace slmsql;

    CLI::App app{"SLM-SQL pipeline: datasets, corrective self-consistency, evaluation, rewards"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "slmsql 0.1.0");

    std::string config_file;
    app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);

    // Every RunConfig key doubles as a long flag; only flags given on the
    // command line take part in precedence resolution.
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flag_options;
    for (const auto& key : config_keys()) {
        CLI::Option* opt = nullptr;
        if (key == "no_merge" || key == "order_sensitive") {
            opt = app.add_flag(flag_name(key))->description("set " + key);
        } else if (key == "api_key") {
            continue;  // environment or config file only
        } else {
            opt = app.add_option(flag_name(key), flag_values[key], "override " + key);
        }
        flag_options[key] = opt;
    }

    cli::BuildDatasetArgs build_args;
    auto* build = app.add_subcommand("build-dataset", "filter and normalize a CoT corpus for SFT");
    build->fallthrough();
    build->add_option("--input", build_args.input, "input corpus JSONL")->required()->check(CLI::ExistingFile);
    build->add_option("--rejects", build_args.rejects, "rejection report (task_id<TAB>rule)");

    cli::BuildMergeDatasetArgs merge_args;
    auto* build_merge = app.add_subcommand("build-merge-dataset",
                                           "sample candidates and build merge-revision samples");
    build_merge->fallthrough();
    build_merge->add_option("--input", merge_args.input, "input corpus JSONL")->required()->check(CLI::ExistingFile);
    build_merge->add_option("--n-candidates", merge_args.n_candidates, "candidates per task")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    cli::GenerateArgs gen_args;
    auto* generate = app.add_subcommand("generate", "run CSC (or plain SC with --no-merge)");
    generate->fallthrough();
    generate->add_option("--input", gen_args.input, "task corpus JSONL")->required()->check(CLI::ExistingFile);
    generate->add_option("--samples-out", gen_args.samples_out, "write generation candidates JSONL");

    cli::EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "execution accuracy report");
    evaluate->fallthrough();
    evaluate->add_option("--input", eval_args.input, "task corpus JSONL")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--predictions", eval_args.predictions, "predictions JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_flag("--exclude-gold-failures", eval_args.exclude_gold_failures,
                       "drop tasks whose gold SQL fails from the denominator");

    auto* serve = app.add_subcommand("serve-reward", "HTTP reward service for RL trainers");
    serve->fallthrough();

    cli::CurvesArgs curve_args;
    auto* curves = app.add_subcommand("curves", "pass@k and consistency@k curves");
    curves->fallthrough();
    curves->add_option("--input", curve_args.input, "task corpus JSONL")->required()->check(CLI::ExistingFile);
    curves->add_option("--samples", curve_args.samples, "candidates JSONL from generate --samples-out")
        ->required()
        ->check(CLI::ExistingFile);
    curves->add_option("--ks", curve_args.ks, "k values (default 1,2,4,...,n)");
    curves->add_option("--trials", curve_args.trials, "Monte-Carlo trials")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    RunConfig cfg;
    try {
        Settings flags;
        for (const auto& [key, opt] : flag_options) {
            if (opt->count() == 0) continue;
            flags[key] = (key == "no_merge" || key == "order_sensitive") ? "true" : flag_values[key];
        }
        std::optional<std::filesystem::path> file;
        if (!config_file.empty()) file = config_file;
        cfg = resolve_config(file, process_environment(), flags);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*build) return cli::build_dataset(cfg, build_args);
        if (*build_merge) return cli::build_merge_dataset(cfg, merge_args);
        if (*generate) return cli::generate(cfg, gen_args);
        if (*evaluate) return cli::evaluate(cfg, eval_args);
        if (*serve) return cli::serve_reward(cfg);
        if (*curves) return cli::curves(cfg, curve_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        const bool usage = e.code() == ErrorCode::InvalidConfig ||
                           e.code() == ErrorCode::MissingDatabaseManifest;
        return usage ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
