#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

#include "slmsql/executor.hpp"

namespace slmsql {

/// Weight of the format term in total = r_ex + w * r_format.
inline constexpr double kFormatRewardWeight = 0.1;

struct RewardScore {
    int r_ex = 0;
    int r_format = 0;
    double total = 0.0;

    friend bool operator==(const RewardScore&, const RewardScore&) = default;
};

/// 1 iff the output is exactly a think block followed by an answer block
/// whose SQL starts with SELECT.
int format_reward(std::string_view raw_output);

/// 1 iff prediction and gold both execute and their results are equivalent.
/// Throws Error(GoldExecutionFailed) when the gold query itself fails.
int execution_reward(std::string_view pred_sql, std::string_view gold_sql, const DatabaseRef& db,
                     const ExecutorOptions& opts = {});

/// The SQL is taken from the answer block, or from fallback extraction when
/// the tags are broken.
RewardScore total_reward(std::string_view raw_output, std::string_view gold_sql,
                         const DatabaseRef& db, const ExecutorOptions& opts = {},
                         double format_weight = kFormatRewardWeight);

nlohmann::json to_json(const RewardScore& s);

}  // namespace slmsql
