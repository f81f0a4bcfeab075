#pragma once

#include <cstddef>
#include <cstdint>

#include "crowdcons/corpus.hpp"

namespace crowdcons {

struct SyntheticData {
    Corpus corpus;
    ImageFeatureTable images;
};

struct PlantedOptions {
    std::size_t questions = 2000;
    /// Fraction of questions that swap one stored answer with another
    /// question's pool.
    double noise_rate = 0.1;
    std::size_t answers_per_question = kDefaultAnswersPerQuestion;
    std::uint64_t seed = 0;
};

/// Half the questions start with "why" and get a spread-out pool (several
/// answers, each given at least twice, none by more than six people); the
/// other half start with "is" and get a unanimous yes/no pool. Saliency
/// vectors are random and carry no signal. Ids are 1..n.
SyntheticData make_planted_corpus(const PlantedOptions& options);

/// Questions with random answer pools over a small answer vocabulary, with
/// per-question skew so agreement, partial agreement and wide disagreement
/// all occur. Used for property tests.
SyntheticData make_random_corpus(std::size_t questions, std::size_t answers_per_question, std::uint64_t seed);

}  // namespace crowdcons
