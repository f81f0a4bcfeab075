#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace crowdcons {

/// Everything a command needs. Persisted as run_config.json next to the
/// outputs; `crowdcons run <run_config.json>` re-executes it.
struct RunConfig {
    std::string command;

    std::filesystem::path corpus;
    std::optional<std::filesystem::path> annotations;
    std::string format = "jsonl";
    std::size_t answers_per_question = 10;
    bool skip_malformed = false;
    std::string source_tag = "real";
    std::optional<std::filesystem::path> image_features;

    std::filesystem::path model;
    std::filesystem::path out_dir = "out";

    std::vector<std::size_t> thresholds{1, 2, 3};
    std::string mode = "qi";
    std::string layout = "truncated";

    std::size_t trees = 25;
    std::optional<std::size_t> features_per_split;
    std::size_t min_leaf_size = 1;
    std::optional<std::size_t> max_depth;
    std::size_t threads = 1;
    std::uint64_t seed = 0;

    std::size_t min_answers = 1;   // S
    std::size_t max_answers = 5;   // R
    std::vector<std::string> budgets;  // counts, or percentages of N such as "50%"
    std::string sim = "exact";
    std::size_t trials = 1000;
    std::size_t status_quo_seeds = 1;
    double cost_per_answer = 0.02;
    double seconds_per_answer = 30.0;

    // synth
    std::size_t synth_questions = 2000;
    std::size_t synth_holdout = 500;
    double synth_noise = 0.1;

    bool operator==(const RunConfig&) const = default;
};

void to_json(nlohmann::json& j, const RunConfig& config);
void from_json(const nlohmann::json& j, RunConfig& config);

void save_run_config(const RunConfig& config, const std::filesystem::path& path);
RunConfig load_run_config(const std::filesystem::path& path);

/// Resolves budget tokens against N. Empty input gives 0%, 10%, ..., 100%.
/// Throws InvalidBudget for malformed or out-of-range tokens.
std::vector<std::size_t> resolve_budgets(const std::vector<std::string>& tokens, std::size_t n);

inline constexpr const char* kSeedEnvironmentVariable = "CROWD_CONSENSUS_SEED";

/// Runs config.command ("analyze", "vocab", "train", "predict", "eval",
/// "allocate", "sweep", "synth"). Progress goes to `log`. Errors are thrown.
void run_command(const RunConfig& config, std::ostream& log);

/// Maps an in-flight exception to the CLI exit code: 2 for input errors,
/// 3 for everything else.
int exit_code_for_current_exception(std::ostream& err);

}  // namespace crowdcons
