#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcons/corpus.hpp"

namespace crowdcons {

/// Canonical answer text. Steps, in order: ASCII lowercase; drop commas
/// between two digits; whole-word "zero".."ten" to digits; punctuation to
/// spaces; drop the articles "a", "an", "the"; collapse whitespace.
/// normalize_answer(normalize_answer(s)) == normalize_answer(s) for all s.
std::string normalize_answer(std::string_view raw);

bool is_ascii_punctuation(char c) noexcept;

/// Occurrence counts of normalized answers, sorted by answer text.
using AnswerCounts = std::map<std::string, std::size_t>;

AnswerCounts count_answers(std::span<const std::string> raw_answers);

struct ValidAnswerSet {
    std::vector<std::string> answers;  // sorted, each with count >= m
    std::size_t m = 1;
    AnswerCounts counts;  // every normalized answer, valid or not
};

/// Answers given by at least m people. Throws InvalidThreshold unless
/// 1 <= m <= raw_answers.size().
ValidAnswerSet valid_answers(std::span<const std::string> raw_answers, std::size_t m);

enum class AgreementLabel { Agreement, Disagreement };

std::string_view to_string(AgreementLabel label) noexcept;

/// Largest count among the normalized answers.
std::size_t modal_count(std::span<const std::string> raw_answers);

/// Agreement iff the modal normalized answer appears at least A-1 times.
/// `expected_answers` is A; throws AnswerCountMismatch when the sizes differ or A < 2.
AgreementLabel agreement_label(std::span<const std::string> raw_answers, std::size_t expected_answers);

inline AgreementLabel agreement_label(const VisualQuestion& q, std::size_t expected_answers) {
    return agreement_label(q.raw_answers, expected_answers);
}

/// histogram[k] = number of questions with exactly k valid answers at threshold m.
std::vector<std::size_t> diversity_histogram(const Corpus& corpus, std::size_t m);

struct AgreementRates {
    double unanimous = 0.0;
    double exactly_one_disagreement = 0.0;
    double at_most_one_disagreement = 0.0;
    std::size_t n = 0;
};

/// Keyed by "yes/no", "number", "other", "unknown" (questions without a type)
/// and "all". Strata with no questions are omitted, except "all".
std::map<std::string, AgreementRates> agreement_by_answer_type(const Corpus& corpus);

}  // namespace crowdcons
