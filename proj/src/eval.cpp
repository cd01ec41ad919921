#include "slmsql/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "slmsql/error.hpp"
#include "slmsql/reward.hpp"

namespace slmsql {

namespace {

constexpr Difficulty kTableOrder[] = {Difficulty::Simple, Difficulty::Moderate,
                                      Difficulty::Challenge, Difficulty::Unknown};
constexpr Stage kStageOrder[] = {Stage::Sc, Stage::CscMerge, Stage::Fallback};

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string pad_left(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

std::string pad_right(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

using u128 = unsigned __int128;

// C(n, k), or nullopt on overflow.
std::optional<u128> binomial(std::size_t n, std::size_t k) {
    if (k > n) return u128{0};
    k = std::min(k, n - k);
    u128 r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        u128 next;
        if (__builtin_mul_overflow(r, static_cast<u128>(n - k + i), &next)) return std::nullopt;
        r = next / i;
    }
    return r;
}

// p / q rounded once to the nearest double (0 <= p <= q, q > 0). Rounding
// the operands separately would break monotonicity near 1.0.
double exact_ratio(u128 p, u128 q) {
    if (p == 0) return 0.0;
    if (p == q) return 1.0;
    std::uint64_t mantissa = 0;
    int exponent = 0;  // value ~= mantissa * 2^-exponent
    int significant = 0;
    u128 r = p;
    while (significant < 64) {
        // One binary digit of the quotient: compare 2r with q without overflow.
        const bool bit = r >= q - r;
        r = bit ? r - (q - r) : r + r;
        ++exponent;
        if (significant > 0 || bit) {
            mantissa = (mantissa << 1) | (bit ? 1u : 0u);
            ++significant;
        }
    }
    // 64 bits leave room for a sticky bit below the 53 that survive.
    if (r != 0) mantissa |= 1u;
    return std::ldexp(static_cast<double>(mantissa), -exponent);
}

}  // namespace

EvalReport execution_accuracy(const std::vector<Prediction>& predictions,
                              const std::vector<TaskRecord>& corpus,
                              const DatabaseRegistry& registry, const EvalOptions& opts) {
    std::unordered_map<std::string_view, const TaskRecord*> by_id;
    for (const auto& t : corpus) by_id.emplace(t.task_id, &t);
    std::vector<const TaskRecord*> tasks;
    tasks.reserve(predictions.size());
    for (const auto& p : predictions) {
        auto it = by_id.find(p.task_id);
        if (it == by_id.end())
            throw Error(ErrorCode::UnknownTask, "prediction for unknown task '" + p.task_id + "'");
        registry.at(it->second->db_id);
        tasks.push_back(it->second);
    }

    std::vector<TaskResult> results(predictions.size());
    auto evaluate_one = [&](std::size_t i) {
        const auto& task = *tasks[i];
        TaskResult r;
        r.task_id = task.task_id;
        r.difficulty = task.difficulty;
        r.stage = predictions[i].stage;
        try {
            r.correct = execution_reward(predictions[i].final_sql, task.gold_sql,
                                         registry.at(task.db_id), opts.exec) == 1;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::GoldExecutionFailed) throw;
            r.gold_failed = true;
            r.gold_error = e.what();
        }
        results[i] = std::move(r);
    };

    std::size_t workers = opts.parallelism;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, predictions.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < predictions.size(); ++i) evaluate_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < predictions.size(); i = next++) evaluate_one(i);
            });
        }
    }

    EvalReport report;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        const auto& p = predictions[i];
        report.gen_time_ms += p.gen_time_ms;
        report.merge_time_ms += p.merge_time_ms;
        report.wall_time_total_ms += p.wall_time_ms;
        if (r.gold_failed) ++report.n_gold_failed;
        if (r.gold_failed && opts.exclude_gold_failures) continue;
        ++report.n_tasks;
        ++report.stage_histogram[r.stage];
        auto& d = report.ex_by_difficulty[r.difficulty];
        ++d.n;
        if (r.correct) {
            ++d.correct;
            ++report.n_correct;
        }
    }
    report.ex_overall = report.n_tasks == 0 ? 0.0
                                            : static_cast<double>(report.n_correct) /
                                                  static_cast<double>(report.n_tasks);
    report.tasks = std::move(results);
    return report;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json by_difficulty = nlohmann::json::object();
    for (const auto& [d, s] : r.ex_by_difficulty)
        by_difficulty[std::string(to_string(d))] = {{"n", s.n}, {"correct", s.correct}, {"ex", s.ex()}};
    nlohmann::json stages = nlohmann::json::object();
    for (Stage s : kStageOrder) {
        auto it = r.stage_histogram.find(s);
        stages[std::string(to_string(s))] = it == r.stage_histogram.end() ? 0 : it->second;
    }
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : r.tasks) {
        nlohmann::json jt = {{"task_id", t.task_id},
                             {"difficulty", std::string(to_string(t.difficulty))},
                             {"stage", std::string(to_string(t.stage))},
                             {"correct", t.correct}};
        if (t.gold_failed) {
            jt["gold_failed"] = true;
            jt["gold_error"] = t.gold_error;
        }
        tasks.push_back(std::move(jt));
    }
    return {
        {"n_tasks", r.n_tasks},
        {"n_correct", r.n_correct},
        {"ex_overall", r.ex_overall},
        {"ex_by_difficulty", std::move(by_difficulty)},
        {"stage_histogram", std::move(stages)},
        {"n_gold_failed", r.n_gold_failed},
        {"wall_time_ms", {{"generation", r.gen_time_ms},
                          {"merge", r.merge_time_ms},
                          {"total", r.wall_time_total_ms}}},
        {"tasks", std::move(tasks)},
    };
}

std::string render_report_table(const EvalReport& r) {
    constexpr std::size_t kLabel = 12;
    constexpr std::size_t kCol = 11;
    std::vector<std::pair<std::string, DifficultyStats>> cols;
    for (Difficulty d : kTableOrder) {
        auto it = r.ex_by_difficulty.find(d);
        if (d == Difficulty::Unknown && it == r.ex_by_difficulty.end()) continue;
        std::string name(to_string(d));
        name[0] = static_cast<char>(name[0] - 'a' + 'A');
        cols.emplace_back(name, it == r.ex_by_difficulty.end() ? DifficultyStats{} : it->second);
    }
    cols.emplace_back("All", DifficultyStats{r.n_tasks, r.n_correct});

    std::string out = pad_right("", kLabel);
    for (const auto& c : cols) out += pad_left(c.first, kCol);
    out += '\n';
    auto row = [&](const std::string& label, auto&& cell) {
        out += pad_right(label, kLabel);
        for (const auto& c : cols) out += pad_left(cell(c.second), kCol);
        out += '\n';
    };
    row("Count", [](const DifficultyStats& s) { return std::to_string(s.n); });
    row("Correct", [](const DifficultyStats& s) { return std::to_string(s.correct); });
    row("EX (%)", [](const DifficultyStats& s) { return format_fixed(100.0 * s.ex(), 2); });

    out += '\n';
    out += pad_right("Stage", kLabel) + pad_left("Count", kCol) + '\n';
    for (Stage s : kStageOrder) {
        auto it = r.stage_histogram.find(s);
        out += pad_right(std::string(to_string(s)), kLabel) +
               pad_left(std::to_string(it == r.stage_histogram.end() ? 0 : it->second), kCol) + '\n';
    }
    if (r.n_gold_failed > 0)
        out += "\nGold SQL failed for " + std::to_string(r.n_gold_failed) + " task(s)\n";
    return out;
}

double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
    if (k > n)
        throw Error(ErrorCode::KExceedsN,
                    "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
    if (c > n) throw Error(ErrorCode::InvalidConfig, "correct count exceeds sample count");
    if (k == 0) return 0.0;
    if (n - c < k) return 1.0;
    const auto num = binomial(n - c, k);
    const auto den = binomial(n, k);
    if (num && den) return exact_ratio(*den - *num, *den);
    long double miss = 1.0L;
    for (std::size_t i = n - c + 1; i <= n; ++i)
        miss *= 1.0L - static_cast<long double>(k) / static_cast<long double>(i);
    return static_cast<double>(1.0L - miss);
}

double pass_at_k(const std::vector<SampleCounts>& tasks, std::size_t k) {
    if (tasks.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& t : tasks) sum += pass_at_k(t.n, t.c, k);
    return sum / static_cast<double>(tasks.size());
}

std::optional<std::string> majority_fingerprint(const SampleVotes& task,
                                                const std::vector<std::size_t>& indices) {
    // Small k: linear scans beat hashing.
    std::vector<std::pair<const std::string*, std::size_t>> tally;
    for (std::size_t idx : indices) {
        const auto& fp = task.fingerprints[idx];
        if (!fp) continue;
        auto it = std::find_if(tally.begin(), tally.end(),
                               [&](const auto& e) { return *e.first == *fp; });
        if (it == tally.end())
            tally.emplace_back(&*fp, 1);
        else
            ++it->second;
    }
    if (tally.empty()) return std::nullopt;
    // tally is in first-occurrence order, so the first maximum wins ties.
    auto best = tally.begin();
    for (auto it = tally.begin(); it != tally.end(); ++it) {
        if (it->second > best->second) best = it;
    }
    return *best->first;
}

double consistency_at_k(const std::vector<SampleVotes>& tasks, std::size_t k,
                        const ConsistencyOptions& opts) {
    if (tasks.empty()) return 0.0;
    if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
    std::mt19937_64 rng(opts.seed);
    double sum = 0.0;
    for (const auto& task : tasks) {
        const std::size_t n = task.fingerprints.size();
        if (k > n)
            throw Error(ErrorCode::KExceedsN,
                        "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
        if (!task.gold) continue;
        auto hit = [&](const std::vector<std::size_t>& subset) {
            const auto winner = majority_fingerprint(task, subset);
            return winner && *winner == *task.gold;
        };

        const auto combos = binomial(n, k);
        if (combos && *combos <= opts.exact_limit) {
            std::vector<std::size_t> subset(k);
            std::iota(subset.begin(), subset.end(), 0);
            std::size_t total = 0;
            std::size_t correct = 0;
            for (;;) {
                ++total;
                if (hit(subset)) ++correct;
                std::size_t i = k;
                while (i > 0 && subset[i - 1] == n - k + (i - 1)) --i;
                if (i == 0) break;
                ++subset[i - 1];
                for (std::size_t j = i; j < k; ++j) subset[j] = subset[j - 1] + 1;
            }
            sum += static_cast<double>(correct) / static_cast<double>(total);
            continue;
        }

        const std::size_t trials = std::max<std::size_t>(opts.trials, 1);
        std::vector<std::size_t> pool(n);
        std::vector<std::size_t> subset(k);
        std::size_t correct = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            std::iota(pool.begin(), pool.end(), 0);
            for (std::size_t i = 0; i < k; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                std::swap(pool[i], pool[pick(rng)]);
            }
            std::copy(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), subset.begin());
            std::sort(subset.begin(), subset.end());
            if (hit(subset)) ++correct;
        }
        sum += static_cast<double>(correct) / static_cast<double>(trials);
    }
    return sum / static_cast<double>(tasks.size());
}

std::vector<std::size_t> default_ks(std::size_t n) {
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k < n; k *= 2) ks.push_back(k);
    if (n > 0) ks.push_back(n);
    return ks;
}

std::vector<CurvePoint> compute_curves(const std::vector<SampleVotes>& tasks,
                                       const std::vector<std::size_t>& ks,
                                       const ConsistencyOptions& opts) {
    std::vector<SampleCounts> counts;
    counts.reserve(tasks.size());
    for (const auto& t : tasks) {
        SampleCounts c{t.fingerprints.size(), 0};
        if (t.gold)
            c.c = static_cast<std::size_t>(std::count(t.fingerprints.begin(), t.fingerprints.end(), t.gold));
        counts.push_back(c);
    }
    std::vector<CurvePoint> curve;
    for (std::size_t k : ks)
        curve.push_back({k, pass_at_k(counts, k), consistency_at_k(tasks, k, opts), std::nullopt});
    return curve;
}

nlohmann::json to_json(const std::vector<CurvePoint>& curve) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : curve) {
        nlohmann::json j = {{"k", p.k}, {"pass_at_k", p.pass_at_k}, {"consistency_at_k", p.consistency_at_k}};
        if (p.csc_at_k) j["csc_at_k"] = *p.csc_at_k;
        out.push_back(std::move(j));
    }
    return out;
}

std::string render_curve_table(const std::vector<CurvePoint>& curve) {
    std::string out = pad_left("k", 6) + pad_left("pass@k", 14) + pad_left("consistency@k", 16) + '\n';
    for (const auto& p : curve) {
        out += pad_left(std::to_string(p.k), 6) + pad_left(format_fixed(p.pass_at_k, 4), 14) +
               pad_left(format_fixed(p.consistency_at_k, 4), 16) + '\n';
    }
    return out;
}

}  // namespace slmsql
