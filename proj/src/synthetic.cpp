#include "crowdcons/synthetic.hpp"

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcons/error.hpp"
#include "crowdcons/random.hpp"

namespace crowdcons {

namespace {

constexpr std::array<std::string_view, 7> kWhySecond{"is", "are", "does", "do", "would", "did", "was"};
constexpr std::array<std::string_view, 5> kIsSecond{"the", "this", "that", "it", "there"};
constexpr std::array<std::string_view, 12> kNouns{"dog", "man", "sky", "car", "cat", "woman",
                                                 "train", "plate", "street", "boy", "table", "bus"};
constexpr std::array<std::string_view, 10> kAdjectives{"red",   "happy", "open", "wet",   "empty",
                                                      "large", "old",   "busy", "smiling", "parked"};
constexpr std::array<std::string_view, 30> kOpenAnswers{
    "red",   "blue",   "green",  "white", "black",   "sunny",   "raining", "eating", "sleeping", "playing",
    "happy", "tired",  "hungry", "bored", "working", "waiting", "parked",  "moving", "winter",   "summer",
    "food",  "dinner", "lunch",  "fun",   "safety",  "travel",  "sport",   "rest",   "music",    "work"};

// Answer multiplicities for "why" pools with A = 10: every answer given at
// least twice, modal count at most six.
constexpr std::array<std::array<std::size_t, 5>, 8> kSpreadPools{{{5, 3, 2, 0, 0},
                                                                  {4, 3, 3, 0, 0},
                                                                  {4, 4, 2, 0, 0},
                                                                  {3, 3, 2, 2, 0},
                                                                  {2, 2, 2, 2, 2},
                                                                  {4, 2, 2, 2, 0},
                                                                  {6, 2, 2, 0, 0},
                                                                  {5, 5, 0, 0, 0}}};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& words) {
    return words[rng.below(N)];
}

SaliencyVector random_saliency(Rng& rng) {
    SaliencyVector p{};
    double sum = 0.0;
    for (double& v : p) {
        v = 0.05 + rng.uniform();
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

std::vector<std::string> spread_pool(Rng& rng, std::size_t answers) {
    std::vector<std::string> pool;
    const auto& shape = kSpreadPools[rng.below(kSpreadPools.size())];
    std::vector<std::size_t> choices(kOpenAnswers.size());
    for (std::size_t i = 0; i < choices.size(); ++i) choices[i] = i;
    rng.shuffle(std::span(choices));
    std::size_t c = 0;
    for (const auto count : shape) {
        for (std::size_t k = 0; k < count && pool.size() < answers; ++k) pool.emplace_back(kOpenAnswers[choices[c]]);
        if (count > 0) ++c;
    }
    // For A != 10 pad or trim with fresh two-of-a-kind answers.
    while (pool.size() < answers) pool.emplace_back(kOpenAnswers[choices[c++ % choices.size()]]);
    rng.shuffle(std::span(pool));
    return pool;
}

}  // namespace

SyntheticData make_planted_corpus(const PlantedOptions& options) {
    if (options.answers_per_question < 2) throw InvalidConfig("need at least two answers per question");
    if (!(options.noise_rate >= 0.0 && options.noise_rate <= 1.0)) throw InvalidConfig("noise rate outside [0, 1]");
    Rng rng(options.seed);
    const std::size_t n = options.questions;
    const std::size_t a = options.answers_per_question;

    std::vector<char> is_why(n, 0);
    for (std::size_t i = 0; i < n / 2; ++i) is_why[i] = 1;
    rng.shuffle(std::span(is_why));

    SyntheticData data;
    std::vector<VisualQuestion> questions(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& q = questions[i];
        q.question_id = static_cast<QuestionId>(i + 1);
        q.image_id = static_cast<ImageId>(100000 + i);
        std::string text;
        if (is_why[i]) {
            text = "Why " + std::string(pick(rng, kWhySecond)) + " the " + std::string(pick(rng, kNouns));
            if (rng.below(2)) text += " so";
            text += " " + std::string(pick(rng, kAdjectives)) + "?";
            q.raw_answers = spread_pool(rng, a);
            q.answer_type = AnswerType::Other;
        } else {
            text = "Is " + std::string(pick(rng, kIsSecond)) + " " + std::string(pick(rng, kNouns));
            if (rng.below(2)) text += " very";
            text += " " + std::string(pick(rng, kAdjectives)) + "?";
            q.raw_answers.assign(a, rng.below(2) ? "yes" : "no");
            q.answer_type = AnswerType::YesNo;
        }
        q.question_text = std::move(text);
        data.images.insert(q.image_id, random_saliency(rng));
    }

    // Answer-level noise: exchange one stored answer with a random partner question.
    const auto noisy = static_cast<std::size_t>(std::llround(options.noise_rate * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(std::span(order));
    for (std::size_t k = 0; k < noisy && n > 1; ++k) {
        const std::size_t i = order[k];
        std::size_t partner = rng.below(n - 1);
        if (partner >= i) ++partner;
        std::swap(questions[i].raw_answers[rng.below(a)], questions[partner].raw_answers[rng.below(a)]);
    }

    data.corpus = Corpus(std::move(questions), a, "synthetic");
    return data;
}

SyntheticData make_random_corpus(std::size_t questions, std::size_t answers_per_question, std::uint64_t seed) {
    if (answers_per_question < 2) throw InvalidConfig("need at least two answers per question");
    constexpr std::array<std::string_view, 6> kFirst{"what", "is", "how", "why", "where", "who"};
    constexpr std::array<std::string_view, 12> kAnswers{"yes", "no",  "2",    "3",     "red",   "blue",
                                                       "cat", "dog", "left", "right", "table", "Two"};
    Rng rng(seed);
    SyntheticData data;
    std::vector<VisualQuestion> out(questions);
    for (std::size_t i = 0; i < questions; ++i) {
        auto& q = out[i];
        q.question_id = static_cast<QuestionId>(10 * i + 7);
        q.image_id = static_cast<ImageId>(i % 13);
        q.question_text = std::string(pick(rng, kFirst)) + " " + std::string(pick(rng, kNouns)) + " " +
                          std::string(pick(rng, kAdjectives));
        // Concentration in [0, 1): 0 means one answer dominates.
        const std::size_t candidates = 1 + rng.below(6);
        const double dominance = rng.uniform();
        std::vector<std::size_t> picks(kAnswers.size());
        for (std::size_t k = 0; k < picks.size(); ++k) picks[k] = k;
        rng.shuffle(std::span(picks));
        for (std::size_t k = 0; k < answers_per_question; ++k) {
            const std::size_t which = rng.uniform() < dominance ? 0 : rng.below(candidates);
            q.raw_answers.emplace_back(kAnswers[picks[which]]);
        }
        const auto type = rng.below(4);
        if (type < 3) q.answer_type = static_cast<AnswerType>(type);
        if (!data.images.contains(q.image_id)) data.images.insert(q.image_id, random_saliency(rng));
    }
    data.corpus = Corpus(std::move(out), answers_per_question, "synthetic");
    return data;
}

}  // namespace crowdcons
