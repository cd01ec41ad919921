#include "commands.hpp"

#include <csignal>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <pthread.h>

#include "slmsql/consensus.hpp"
#include "slmsql/corpus.hpp"
#include "slmsql/error.hpp"
#include "slmsql/eval.hpp"
#include "slmsql/reward_service.hpp"
#include "slmsql/task.hpp"

namespace slmsql::cli {

namespace {

namespace fs = std::filesystem;

const std::string& require_out(const RunConfig& cfg) {
    if (cfg.out.empty()) throw Error(ErrorCode::InvalidConfig, "config key 'out': required");
    return cfg.out;
}

DatabaseRegistry load_registry(const RunConfig& cfg) {
    if (cfg.db_manifest.empty())
        throw Error(ErrorCode::InvalidConfig, "config key 'db_manifest': required");
    return DatabaseRegistry::from_manifest(cfg.db_manifest);
}

// Runs fn(i) for i in [0, n) on up to `cap` threads; rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t n, std::size_t cap, Fn&& fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;
    auto run = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const std::size_t workers = std::min(cap, n);
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
        run();
    }
    if (error) std::rethrow_exception(error);
}

std::vector<TaskRecord> tasks_of(const std::vector<CorpusEntry>& corpus) {
    std::vector<TaskRecord> out;
    out.reserve(corpus.size());
    for (const auto& e : corpus) out.push_back(e.task);
    return out;
}

}  // namespace

int build_dataset(const RunConfig& cfg, const BuildDatasetArgs& args) {
    const fs::path out = require_out(cfg);
    const auto corpus = load_corpus(args.input);
    std::vector<nlohmann::json> accepted;
    std::string rejects;
    std::size_t counts[4] = {0, 0, 0, 0};
    std::size_t missing_cot = 0;
    for (const auto& entry : corpus) {
        if (!entry.cot) {
            ++missing_cot;
            continue;
        }
        const RawTrainingSample sample{entry.task, *entry.cot};
        const auto verdict = filter_training_sample(sample, cfg.token_limit);
        if (const auto* r = std::get_if<Reject>(&verdict)) {
            ++counts[static_cast<int>(r->rule)];
            rejects += entry.task.task_id + "\t" + std::string(to_string(r->rule)) + "\n";
            continue;
        }
        accepted.push_back(to_json(normalize_cot(sample)));
    }
    write_jsonl(out, accepted);
    write_file(args.rejects.empty() ? fs::path(out.string() + ".rejects.tsv") : fs::path(args.rejects),
               rejects);
    std::cerr << "accepted " << accepted.size() << " of " << corpus.size() << " samples";
    for (int r = 0; r < 4; ++r)
        std::cerr << "; " << to_string(static_cast<RejectRule>(r)) << "=" << counts[r];
    if (missing_cot) std::cerr << "; without cot=" << missing_cot;
    std::cerr << "\n";
    return 0;
}

int build_merge_dataset(const RunConfig& cfg, const BuildMergeDatasetArgs& args) {
    const fs::path out = require_out(cfg);
    const auto registry = load_registry(cfg);
    const auto corpus = load_corpus(args.input);
    SamplingConfig sampling = cfg.generation_sampling();
    sampling.n_samples = args.n_candidates;
    HttpCompletionSource source(cfg.generation_endpoint());
    const auto exec = cfg.executor();
    const TruncationLimits limits{cfg.max_rows, cfg.max_chars};

    std::vector<std::optional<nlohmann::json>> rows(corpus.size());
    parallel_for(corpus.size(), cfg.task_concurrency, [&](std::size_t i) {
        const auto& task = corpus[i].task;
        const auto& db = registry.at(task.db_id);
        const auto raws = source.complete(render_generation_prompt(prompt_input(task)), sampling);
        std::vector<ParsedCandidate> candidates;
        for (const auto& r : raws) candidates.push_back(parse_model_output(r));
        const auto outcomes = execute_candidates(db, candidates, exec, 0);
        const auto gold = execute_sql(db, task.gold_sql, exec);
        if (auto s = build_merge_training_sample(task, candidates, outcomes, gold, limits))
            rows[i] = to_json(*s);
    });
    std::vector<nlohmann::json> kept;
    for (auto& r : rows) {
        if (r) kept.push_back(std::move(*r));
    }
    write_jsonl(out, kept);
    std::cerr << "built " << kept.size() << " merge samples from " << corpus.size() << " tasks\n";
    return 0;
}

int generate(const RunConfig& cfg, const GenerateArgs& args) {
    const fs::path out = require_out(cfg);
    const auto registry = load_registry(cfg);
    const auto corpus = load_corpus(args.input);
    for (const auto& e : corpus) registry.at(e.task.db_id);

    HttpCompletionSource gen(cfg.generation_endpoint());
    HttpCompletionSource merge(cfg.merge_endpoint());
    const CscConfig csc = cfg.csc();
    CscMetrics metrics;

    std::vector<Prediction> predictions(corpus.size());
    std::vector<CscTrace> traces(args.samples_out.empty() ? 0 : corpus.size());
    parallel_for(corpus.size(), cfg.task_concurrency, [&](std::size_t i) {
        predictions[i] = run_csc(corpus[i].task, registry, gen, merge, csc, &metrics,
                                 traces.empty() ? nullptr : &traces[i]);
    });

    std::vector<nlohmann::json> rows;
    rows.reserve(predictions.size());
    for (const auto& p : predictions) rows.push_back(to_json(p));
    write_jsonl(out, rows);

    if (!args.samples_out.empty()) {
        std::vector<nlohmann::json> samples;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            nlohmann::json sqls = nlohmann::json::array();
            nlohmann::json fmt = nlohmann::json::array();
            for (const auto& c : traces[i].candidates) {
                sqls.push_back(c.answer_sql.value_or(""));
                fmt.push_back(c.format_ok);
            }
            samples.push_back({{"task_id", corpus[i].task.task_id}, {"sqls", std::move(sqls)},
                               {"format_ok", std::move(fmt)}});
        }
        write_jsonl(args.samples_out, samples);
    }
    std::cerr << "tasks=" << metrics.tasks << " sc=" << metrics.sc
              << " csc_merge=" << metrics.csc_merge << " fallback=" << metrics.fallback
              << " gen_completions=" << metrics.gen_completions
              << " merge_completions=" << metrics.merge_completions << "\n";
    return 0;
}

int evaluate(const RunConfig& cfg, const EvaluateArgs& args) {
    const fs::path out = require_out(cfg);
    const auto registry = load_registry(cfg);
    const auto corpus = tasks_of(load_corpus(args.input));
    std::vector<Prediction> predictions;
    for (const auto& row : read_jsonl(args.predictions)) predictions.push_back(prediction_from_json(row));

    EvalOptions opts;
    opts.exec = cfg.executor();
    opts.exclude_gold_failures = args.exclude_gold_failures;
    const auto report = execution_accuracy(predictions, corpus, registry, opts);
    const std::string table = render_report_table(report);
    write_file(out / "report.json", to_json(report).dump(2) + "\n");
    write_file(out / "report.txt", table);
    std::cout << table;
    return 0;
}

int serve_reward(const RunConfig& cfg) {
    auto registry = load_registry(cfg);
    const std::size_t n_db = registry.size();

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    RewardService service(std::move(registry), cfg.reward_service());
    const int port = service.bind(cfg.host, cfg.port);
    if (port < 0) {
        std::cerr << "cannot bind " << cfg.host << ":" << cfg.port << "\n";
        return 2;
    }
    std::cout << "reward service listening on http://" << cfg.host << ":" << port << " ("
              << n_db << " databases)" << std::endl;

    std::jthread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    const bool ok = service.serve();
    pthread_kill(waiter.native_handle(), SIGTERM);
    return ok ? 0 : 2;
}

int curves(const RunConfig& cfg, const CurvesArgs& args) {
    const fs::path out = require_out(cfg);
    const auto registry = load_registry(cfg);
    const auto corpus = tasks_of(load_corpus(args.input));
    std::unordered_map<std::string, const TaskRecord*> by_id;
    for (const auto& t : corpus) by_id.emplace(t.task_id, &t);
    const auto exec = cfg.executor();

    const auto rows = read_jsonl(args.samples);
    std::vector<SampleVotes> tasks(rows.size());
    std::size_t min_n = SIZE_MAX;
    parallel_for(rows.size(), cfg.task_concurrency, [&](std::size_t i) {
        const auto id = rows[i].at("task_id").get<std::string>();
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorCode::UnknownTask, "samples for unknown task '" + id + "'");
        const auto& db = registry.at(it->second->db_id);
        const auto sqls = rows[i].at("sqls").get<std::vector<std::string>>();
        const auto outcomes = execute_batch(db, sqls, exec, 1);
        SampleVotes v;
        for (const auto& o : outcomes)
            v.fingerprints.push_back(o.ok() ? std::optional(o.fingerprint->canonical) : std::nullopt);
        const auto gold = execute_sql(db, it->second->gold_sql, exec);
        if (gold.ok()) v.gold = gold.fingerprint->canonical;
        tasks[i] = std::move(v);
    });
    for (const auto& t : tasks) min_n = std::min(min_n, t.fingerprints.size());
    if (tasks.empty() || min_n == 0) throw Error(ErrorCode::ParseError, "no samples to evaluate");

    ConsistencyOptions opts;
    opts.trials = args.trials;
    opts.seed = cfg.seed;
    const auto curve = compute_curves(tasks, args.ks.empty() ? default_ks(min_n) : args.ks, opts);
    const std::string table = render_curve_table(curve);
    write_file(out / "curves.json", to_json(curve).dump(2) + "\n");
    write_file(out / "curves.txt", table);
    std::cout << table;
    return 0;
}

}  // namespace slmsql::cli
