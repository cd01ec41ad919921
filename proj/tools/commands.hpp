#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "slmsql/config.hpp"

namespace slmsql::cli {

struct BuildDatasetArgs {
    std::string input;
    std::string rejects;  // default: <out>.rejects.tsv
};

struct BuildMergeDatasetArgs {
    std::string input;
    std::size_t n_candidates = 8;
};

struct GenerateArgs {
    std::string input;
    std::string samples_out;
};

struct EvaluateArgs {
    std::string input;
    std::string predictions;
    bool exclude_gold_failures = false;
};

struct CurvesArgs {
    std::string input;
    std::string samples;
    std::vector<std::size_t> ks;
    std::size_t trials = 10000;
};

int build_dataset(const RunConfig& cfg, const BuildDatasetArgs& args);
int build_merge_dataset(const RunConfig& cfg, const BuildMergeDatasetArgs& args);
int generate(const RunConfig& cfg, const GenerateArgs& args);
int evaluate(const RunConfig& cfg, const EvaluateArgs& args);
int serve_reward(const RunConfig& cfg);
int curves(const RunConfig& cfg, const CurvesArgs& args);

}  // namespace slmsql::cli
