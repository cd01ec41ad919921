#include "slmsql/reward.hpp"

#include "slmsql/error.hpp"
#include "slmsql/sampler.hpp"

namespace slmsql {

int format_reward(std::string_view raw_output) {
    return parse_model_output(raw_output).format_ok ? 1 : 0;
}

int execution_reward(std::string_view pred_sql, std::string_view gold_sql, const DatabaseRef& db,
                     const ExecutorOptions& opts) {
    const auto gold = execute_sql(db, gold_sql, opts);
    if (!gold.ok()) {
        const std::string why = gold.status == ExecStatus::Timeout
                                    ? std::string("timeout")
                                    : std::string(to_string(*gold.error_kind)) + ": " + gold.message;
        throw Error(ErrorCode::GoldExecutionFailed,
                    "gold SQL failed on '" + db.db_id + "': " + why);
    }
    const auto pred = execute_sql(db, pred_sql, opts);
    return results_equivalent(pred, gold) ? 1 : 0;
}

RewardScore total_reward(std::string_view raw_output, std::string_view gold_sql,
                         const DatabaseRef& db, const ExecutorOptions& opts, double format_weight) {
    const auto parsed = parse_model_output(raw_output);
    RewardScore s;
    s.r_format = parsed.format_ok ? 1 : 0;
    s.r_ex = execution_reward(parsed.answer_sql.value_or(""), gold_sql, db, opts);
    s.total = static_cast<double>(s.r_ex) + format_weight * static_cast<double>(s.r_format);
    return s;
}

nlohmann::json to_json(const RewardScore& s) {
    return {{"r_ex", s.r_ex}, {"r_format", s.r_format}, {"total", s.total}};
}

}  // namespace slmsql
