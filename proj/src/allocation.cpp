#include "crowdcons/allocation.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include "crowdcons/answers.hpp"
#include "crowdcons/error.hpp"
#include "crowdcons/random.hpp"

namespace crowdcons {

namespace {

constexpr std::size_t kMaxExactPool = 64;

// Pascal's triangle up to 64 fits in uint64 (C(64, 32) ~ 1.8e18).
const std::array<std::array<std::uint64_t, kMaxExactPool + 1>, kMaxExactPool + 1>& binomials() {
    static const auto table = [] {
        std::array<std::array<std::uint64_t, kMaxExactPool + 1>, kMaxExactPool + 1> t{};
        for (std::size_t n = 0; n <= kMaxExactPool; ++n) {
            t[n][0] = 1;
            for (std::size_t k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k <= n - 1 ? t[n - 1][k] : 0);
        }
        return t;
    }();
    return table;
}

// A question's stored pool reduced to what the simulation needs.
struct Pool {
    std::vector<std::size_t> truth_counts;
    std::vector<int> truth_index;  // per stored answer, -1 when not a truth answer
};

Pool make_pool(const VisualQuestion& q) {
    Pool pool;
    std::map<std::string, int> index;
    for (const auto& [answer, count] : count_answers(q.raw_answers)) {
        if (count >= kTruthThreshold) {
            index.emplace(answer, static_cast<int>(pool.truth_counts.size()));
            pool.truth_counts.push_back(count);
        }
    }
    for (const auto& raw : q.raw_answers) {
        const auto it = index.find(normalize_answer(raw));
        pool.truth_index.push_back(it == index.end() ? -1 : it->second);
    }
    return pool;
}

void check_counts(std::size_t min_answers, std::size_t max_answers, std::size_t answers_per_question) {
    if (min_answers < 1 || min_answers >= max_answers || max_answers > answers_per_question) {
        throw InvalidCounts("need 1 <= S < R <= A, got S=" + std::to_string(min_answers) +
                            " R=" + std::to_string(max_answers) + " A=" + std::to_string(answers_per_question));
    }
}

}  // namespace

std::vector<QuestionId> question_ids(const Corpus& corpus) {
    std::vector<QuestionId> ids;
    ids.reserve(corpus.size());
    for (const auto& q : corpus.questions()) ids.push_back(q.question_id);
    return ids;
}

Ranking rank_by_disagreement(const std::unordered_map<QuestionId, double>& predictions,
                             std::span<const QuestionId> question_ids) {
    std::vector<std::pair<double, QuestionId>> scored;
    scored.reserve(question_ids.size());
    for (const auto id : question_ids) {
        const auto it = predictions.find(id);
        if (it == predictions.end()) throw MissingPrediction("no prediction for question " + std::to_string(id));
        scored.emplace_back(it->second, id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    Ranking ranking;
    for (const auto& [score, id] : scored) ranking.order.push_back(id);
    return ranking;
}

Ranking status_quo_ranking(std::span<const QuestionId> question_ids, std::uint64_t seed) {
    Ranking ranking{{question_ids.begin(), question_ids.end()}};
    std::sort(ranking.order.begin(), ranking.order.end());
    Rng rng(seed);
    rng.shuffle(std::span(ranking.order));
    return ranking;
}

Ranking oracle_ranking(const Corpus& corpus, std::size_t min_answers, std::size_t max_answers) {
    const std::size_t a = corpus.answers_per_question();
    check_counts(min_answers, max_answers, a);
    struct Key {
        std::size_t truth;
        double gain;
        QuestionId id;
    };
    std::vector<Key> keys;
    keys.reserve(corpus.size());
    for (const auto& q : corpus.questions()) {
        const Pool pool = make_pool(q);
        const double gain = expected_capture(pool.truth_counts, a, max_answers) -
                            expected_capture(pool.truth_counts, a, min_answers);
        keys.push_back({pool.truth_counts.size(), gain, q.question_id});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& x, const Key& y) {
        if (x.truth != y.truth) return x.truth > y.truth;
        if (x.gain != y.gain) return x.gain > y.gain;
        return x.id < y.id;
    });
    Ranking ranking;
    for (const auto& k : keys) ranking.order.push_back(k.id);
    return ranking;
}

std::size_t AllocationPlan::total_answers() const noexcept {
    std::size_t total = 0;
    for (const auto& [id, count] : assignments) total += count;
    return total;
}

AllocationPlan make_plan(const Ranking& ranking, std::size_t budget, std::size_t min_answers,
                         std::size_t max_answers, std::size_t answers_per_question) {
    check_counts(min_answers, max_answers, answers_per_question);
    if (budget > ranking.order.size()) {
        throw InvalidBudget("budget " + std::to_string(budget) + " exceeds " +
                            std::to_string(ranking.order.size()) + " questions");
    }
    AllocationPlan plan;
    plan.min_answers = min_answers;
    plan.max_answers = max_answers;
    plan.budget = budget;
    for (std::size_t i = 0; i < ranking.order.size(); ++i) {
        if (!plan.assignments.emplace(ranking.order[i], i < budget ? max_answers : min_answers).second) {
            throw InvalidBudget("ranking lists question " + std::to_string(ranking.order[i]) + " twice");
        }
    }
    return plan;
}

std::size_t TruthSet::max_diversity() const noexcept {
    std::size_t total = 0;
    for (const auto& [id, set] : answers) total += set.size();
    return total;
}

TruthSet truth_set(const Corpus& corpus) {
    TruthSet truth;
    for (const auto& q : corpus.questions()) {
        auto& set = truth.answers[q.question_id];
        for (const auto& [answer, count] : count_answers(q.raw_answers)) {
            if (count >= kTruthThreshold) set.push_back(answer);
        }
    }
    return truth;
}

double diversity_score(const std::map<QuestionId, std::set<std::string>>& collected, const TruthSet& truth) {
    if (collected.size() != truth.answers.size()) throw KeyMismatch("collected and truth cover different questions");
    std::size_t total = 0;
    auto c = collected.begin();
    for (const auto& [id, answers] : truth.answers) {
        if (c->first != id) throw KeyMismatch("question " + std::to_string(id) + " missing from collected answers");
        for (const auto& a : answers) total += c->second.contains(a);
        ++c;
    }
    return static_cast<double>(total);
}

double expected_capture(std::span<const std::size_t> truth_counts, std::size_t pool_size, std::size_t draws) {
    if (pool_size > kMaxExactPool) {
        throw Overflow("exact expectation supports at most " + std::to_string(kMaxExactPool) + " answers per question");
    }
    if (draws > pool_size) throw InvalidBudget("cannot draw " + std::to_string(draws) + " of " + std::to_string(pool_size));
    const auto& c = binomials();
    const auto denominator = static_cast<long double>(c[pool_size][draws]);
    long double expected = 0.0L;
    for (const auto count : truth_counts) {
        if (count > pool_size) throw InvalidCounts("answer count exceeds pool size");
        const std::size_t others = pool_size - count;
        const std::uint64_t miss = draws <= others ? c[others][draws] : 0;
        expected += 1.0L - static_cast<long double>(miss) / denominator;
    }
    return static_cast<double>(expected);
}

std::string_view to_string(SimulationMode mode) noexcept {
    return mode == SimulationMode::MonteCarlo ? "mc" : "exact";
}

std::optional<SimulationMode> parse_simulation_mode(std::string_view text) noexcept {
    if (text == "mc" || text == "monte_carlo") return SimulationMode::MonteCarlo;
    if (text == "exact" || text == "exact_expectation") return SimulationMode::ExactExpectation;
    return std::nullopt;
}

namespace {

std::size_t captured_in_trial(const Pool& pool, std::size_t draws, std::uint64_t seed, QuestionId id,
                              std::size_t trial, std::vector<std::size_t>& scratch, std::vector<char>& hit) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(id), trial));
    const std::size_t a = pool.truth_index.size();
    scratch.resize(a);
    for (std::size_t i = 0; i < a; ++i) scratch[i] = i;
    hit.assign(pool.truth_counts.size(), 0);
    std::size_t captured = 0;
    for (std::size_t k = 0; k < draws; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.below(a - k));
        std::swap(scratch[k], scratch[j]);
        const int t = pool.truth_index[scratch[k]];
        if (t >= 0 && !hit[static_cast<std::size_t>(t)]) {
            hit[static_cast<std::size_t>(t)] = 1;
            ++captured;
        }
    }
    return captured;
}

}  // namespace

namespace {

std::vector<Pool> make_pools(const Corpus& corpus) {
    std::vector<Pool> pools;
    pools.reserve(corpus.size());
    for (const auto& q : corpus.questions()) pools.push_back(make_pool(q));
    return pools;
}

DiversityReport simulate_pools(const AllocationPlan& plan, const Corpus& corpus, const std::vector<Pool>& pools,
                               SimulationMode mode, std::size_t trials, std::uint64_t seed) {
    const std::size_t a = corpus.answers_per_question();
    if (plan.assignments.size() != corpus.size()) throw KeyMismatch("plan does not cover the corpus");
    DiversityReport report;
    report.budget = plan.budget;
    report.mode = mode;
    if (mode == SimulationMode::MonteCarlo) {
        if (trials == 0) throw InvalidConfig("Monte Carlo simulation needs at least one trial");
        report.trials = trials;
        report.seed = seed;
    }

    // Summed in corpus order regardless of ranking, so plans that assign the
    // same counts give bit-identical results.
    long double expected = 0.0L;
    std::uint64_t captured = 0;
    std::vector<std::size_t> scratch;
    std::vector<char> hit;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& q = corpus.questions()[i];
        const auto it = plan.assignments.find(q.question_id);
        if (it == plan.assignments.end()) {
            throw KeyMismatch("plan has no entry for question " + std::to_string(q.question_id));
        }
        const std::size_t n = it->second;
        if (n > a) {
            throw InvalidBudget("question " + std::to_string(q.question_id) + " assigned more answers than stored");
        }
        const Pool& pool = pools[i];
        report.max_diversity += pool.truth_counts.size();
        report.answers_spent += n;
        if (mode == SimulationMode::ExactExpectation) {
            expected += expected_capture(pool.truth_counts, a, n);
        } else {
            for (std::size_t t = 0; t < trials; ++t) {
                captured += captured_in_trial(pool, n, seed, q.question_id, t, scratch, hit);
            }
        }
    }
    report.diversity = mode == SimulationMode::ExactExpectation
                           ? static_cast<double>(expected)
                           : static_cast<double>(captured) / static_cast<double>(trials);
    return report;
}

}  // namespace

DiversityReport simulate_collection(const AllocationPlan& plan, const Corpus& corpus, SimulationMode mode,
                                    std::size_t trials, std::uint64_t seed) {
    return simulate_pools(plan, corpus, make_pools(corpus), mode, trials, seed);
}

std::vector<SweepRow> sweep(const Corpus& corpus, const std::vector<RankingFamily>& families,
                            const SweepOptions& options) {
    const std::size_t a = corpus.answers_per_question();
    check_counts(options.min_answers, options.max_answers, a);
    for (const auto b : options.budgets) {
        if (b > corpus.size()) {
            throw InvalidBudget("budget " + std::to_string(b) + " exceeds " + std::to_string(corpus.size()) +
                                " questions");
        }
    }
    const auto pools = make_pools(corpus);
    std::size_t max_diversity = 0;
    for (const auto& pool : pools) max_diversity += pool.truth_counts.size();

    std::vector<SweepRow> rows;
    for (const auto& family : families) {
        if (family.rankings.empty()) throw InvalidConfig("ranking family '" + family.name + "' is empty");
        for (const auto b : options.budgets) {
            SweepRow row;
            row.ranking = family.name;
            row.budget = b;
            double sum = 0.0;
            for (const auto& ranking : family.rankings) {
                const auto plan = make_plan(ranking, b, options.min_answers, options.max_answers, a);
                const auto report = simulate_pools(plan, corpus, pools, options.mode, options.trials, options.seed);
                sum += report.diversity;
                row.answers_spent = report.answers_spent;
            }
            row.diversity = sum / static_cast<double>(family.rankings.size());
            row.diversity_fraction = max_diversity == 0 ? 0.0 : row.diversity / static_cast<double>(max_diversity);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::optional<double> answers_to_reach(const std::vector<SweepRow>& rows, std::string_view ranking,
                                       double fraction) {
    std::vector<const SweepRow*> series;
    for (const auto& r : rows) {
        if (r.ranking == ranking) series.push_back(&r);
    }
    std::sort(series.begin(), series.end(),
              [](const SweepRow* x, const SweepRow* y) { return x->answers_spent < y->answers_spent; });
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i]->diversity_fraction < fraction) continue;
        if (i == 0) return static_cast<double>(series[0]->answers_spent);
        const auto& lo = *series[i - 1];
        const auto& hi = *series[i];
        const double span = hi.diversity_fraction - lo.diversity_fraction;
        const double t = span > 0.0 ? (fraction - lo.diversity_fraction) / span : 1.0;
        return static_cast<double>(lo.answers_spent) +
               t * (static_cast<double>(hi.answers_spent) - static_cast<double>(lo.answers_spent));
    }
    return std::nullopt;
}

}  // namespace crowdcons
