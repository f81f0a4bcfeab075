#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crowdcons/corpus.hpp"

namespace crowdcons {

/// Question ids, most likely to need extra answers first.
struct Ranking {
    std::vector<QuestionId> order;
    bool operator==(const Ranking&) const = default;
};

/// Descending p_disagreement, ties by ascending id. Throws MissingPrediction
/// when an id in `question_ids` has no score.
Ranking rank_by_disagreement(const std::unordered_map<QuestionId, double>& predictions,
                             std::span<const QuestionId> question_ids);

/// Uniform random permutation of the ids; depends only on the id set and seed.
Ranking status_quo_ranking(std::span<const QuestionId> question_ids, std::uint64_t seed);

/// Upper-bound baseline: descending |truth set|, then descending expected gain
/// from R instead of S answers, then ascending id.
Ranking oracle_ranking(const Corpus& corpus, std::size_t min_answers = 1, std::size_t max_answers = 5);

std::vector<QuestionId> question_ids(const Corpus& corpus);

struct AllocationPlan {
    std::map<QuestionId, std::size_t> assignments;
    std::size_t min_answers = 1;  // S
    std::size_t max_answers = 5;  // R
    std::size_t budget = 0;       // B, questions receiving R

    std::size_t total_answers() const noexcept;
};

/// The first B ranked questions get R answers, the rest S. Throws
/// InvalidBudget (B > N, or duplicate ids) and InvalidCounts (unless
/// 1 <= S < R <= answers_per_question).
AllocationPlan make_plan(const Ranking& ranking, std::size_t budget, std::size_t min_answers = 1,
                         std::size_t max_answers = 5, std::size_t answers_per_question = kDefaultAnswersPerQuestion);

/// Normalized answers observed at least twice among a question's stored answers.
struct TruthSet {
    std::map<QuestionId, std::vector<std::string>> answers;

    std::size_t max_diversity() const noexcept;
};

inline constexpr std::size_t kTruthThreshold = 2;

TruthSet truth_set(const Corpus& corpus);

/// Sum over questions of |collected ∩ truth|. Throws KeyMismatch unless both
/// cover the same questions.
double diversity_score(const std::map<QuestionId, std::set<std::string>>& collected, const TruthSet& truth);

/// Expected number of truth answers captured when drawing `draws` of the
/// `pool_size` stored answers without replacement:
/// sum over truth answers of 1 - C(pool - c, draws) / C(pool, draws).
/// Exact binomials; throws Overflow for pool_size > 64.
double expected_capture(std::span<const std::size_t> truth_counts, std::size_t pool_size, std::size_t draws);

enum class SimulationMode { MonteCarlo, ExactExpectation };

std::string_view to_string(SimulationMode mode) noexcept;
std::optional<SimulationMode> parse_simulation_mode(std::string_view text) noexcept;

struct DiversityReport {
    std::size_t budget = 0;
    double diversity = 0.0;
    std::size_t max_diversity = 0;
    std::size_t answers_spent = 0;
    SimulationMode mode = SimulationMode::ExactExpectation;
    std::size_t trials = 0;  // Monte Carlo only
    std::uint64_t seed = 0;  // Monte Carlo only
};

/// Collects the planned number of answers per question from its stored pool.
/// Monte Carlo draws use a stream derived from (seed, question_id, trial).
DiversityReport simulate_collection(const AllocationPlan& plan, const Corpus& corpus, SimulationMode mode,
                                    std::size_t trials = 0, std::uint64_t seed = 0);

/// One ranking strategy; D is averaged over its member rankings (several
/// seeded status-quo orders, for example).
struct RankingFamily {
    std::string name;
    std::vector<Ranking> rankings;
};

struct SweepRow {
    std::string ranking;
    std::size_t budget = 0;
    std::size_t answers_spent = 0;
    double diversity = 0.0;
    double diversity_fraction = 0.0;
};

struct SweepOptions {
    std::vector<std::size_t> budgets;
    std::size_t min_answers = 1;
    std::size_t max_answers = 5;
    SimulationMode mode = SimulationMode::ExactExpectation;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
};

std::vector<SweepRow> sweep(const Corpus& corpus, const std::vector<RankingFamily>& families,
                            const SweepOptions& options);

/// Answers needed by `ranking` to reach `fraction` of max diversity, linearly
/// interpolated between sweep rows; std::nullopt if never reached.
std::optional<double> answers_to_reach(const std::vector<SweepRow>& rows, std::string_view ranking,
                                       double fraction);

}  // namespace crowdcons
