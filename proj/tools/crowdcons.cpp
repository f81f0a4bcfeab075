#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crowdcons/cli.hpp"

namespace {

void add_common_options(CLI::App& cmd, crowdcons::RunConfig& c, bool& seed_given) {
    cmd.add_option("--corpus", c.corpus, "Questions file (jsonl) or VQA v1.0 questions JSON");
    cmd.add_option("--annotations", c.annotations, "VQA v1.0 annotations JSON");
    cmd.add_option("--format", c.format, "Corpus format")->check(CLI::IsMember({"jsonl", "vqa_v1_json"}));
    cmd.add_option("--answers-per-question", c.answers_per_question, "Answers stored per question (A)");
    cmd.add_flag("--skip-malformed", c.skip_malformed, "Drop questions with the wrong answer count");
    cmd.add_option("--source-tag", c.source_tag, "Corpus tag recorded in vocabularies");
    cmd.add_option("--image-features", c.image_features, "CSV: image_id,p0,p1,p2,p3,p4");
    cmd.add_option("--model", c.model, "Model file (default <out-dir>/model.json)");
    cmd.add_option("--out-dir", c.out_dir, "Output directory");
    cmd.add_option("--m", c.thresholds, "Valid-answer thresholds for analyze")->delimiter(',');
    cmd.add_option("--mode", c.mode, "Feature blocks")->check(CLI::IsMember({"q", "i", "qi"}));
    cmd.add_option("--layout", c.layout, "Ablation layout")->check(CLI::IsMember({"truncated", "zeroed"}));
    cmd.add_option("--trees", c.trees, "Number of trees (odd)");
    cmd.add_option("--features-per-split", c.features_per_split, "Default ceil(sqrt(d))");
    cmd.add_option("--min-leaf", c.min_leaf_size, "Minimum samples per leaf");
    cmd.add_option("--max-depth", c.max_depth, "Maximum tree depth");
    cmd.add_option("--threads", c.threads, "Training threads (0 = all cores)");
    cmd.add_option("--seed", c.seed, "Master seed (default $CROWD_CONSENSUS_SEED or 0)")
        ->each([&seed_given](const std::string&) { seed_given = true; });
    cmd.add_option("--budgets", c.budgets, "Budgets B: counts, N, or percentages like 50%")->delimiter(',');
    cmd.add_option("--s", c.min_answers, "Minimum answers per question (S)");
    cmd.add_option("--r", c.max_answers, "Answers for budgeted questions (R)");
    cmd.add_option("--sim", c.sim, "Diversity simulation")->check(CLI::IsMember({"exact", "mc"}));
    cmd.add_option("--trials", c.trials, "Monte Carlo trials");
    cmd.add_option("--status-quo-seeds", c.status_quo_seeds, "Random orders averaged for the status quo");
    cmd.add_option("--cost-per-answer", c.cost_per_answer, "USD per answer for sweep_costs.csv");
    cmd.add_option("--seconds-per-answer", c.seconds_per_answer, "Worker seconds per answer");
    cmd.add_option("--questions", c.synth_questions, "synth: corpus size");
    cmd.add_option("--holdout", c.synth_holdout, "synth: held-out questions");
    cmd.add_option("--noise", c.synth_noise, "synth: fraction of questions with a swapped answer");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predict crowd answer (dis)agreement for visual questions and budget answer collection"};
    app.require_subcommand(1);

    crowdcons::RunConfig config;
    bool seed_given = false;
    const char* descriptions[][2] = {
        {"analyze", "Answer-diversity histograms and agreement rates by answer type"},
        {"vocab", "Build first/second question-word vocabularies"},
        {"train", "Train the random-forest (dis)agreement classifier"},
        {"predict", "Predict (dis)agreement for every question"},
        {"eval", "Precision-recall curves and average precision"},
        {"allocate", "Answer-collection plan for one budget"},
        {"sweep", "Captured diversity across budgets for ours, status quo and oracle"},
        {"synth", "Write a seeded planted-signal corpus"}};
    for (const auto& [name, help] : descriptions) {
        auto* cmd = app.add_subcommand(name, help);
        add_common_options(*cmd, config, seed_given);
        cmd->callback([&config, name = std::string(name)] { config.command = name; });
    }
    std::string replay;
    auto* run = app.add_subcommand("run", "Re-execute a saved run_config.json");
    run->add_option("config", replay, "Path to run_config.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            config = crowdcons::load_run_config(replay);
        } else if (!seed_given) {
            if (const char* env = std::getenv(crowdcons::kSeedEnvironmentVariable)) {
                try {
                    config.seed = std::stoull(env);
                } catch (const std::exception&) {
                    std::cerr << "error: " << crowdcons::kSeedEnvironmentVariable << " is not an integer\n";
                    return 2;
                }
            }
        }
        crowdcons::run_command(config, std::cout);
        return 0;
    } catch (...) {
        return crowdcons::exit_code_for_current_exception(std::cerr);
    }
}
