#include "crowdcons/answers.hpp"

#include <algorithm>
#include <array>

#include "crowdcons/error.hpp"

namespace crowdcons {

namespace {

constexpr std::array<std::string_view, 11> kNumberWords{
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};

bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

bool is_word_char(char c) noexcept { return !is_space(c) && !is_ascii_punctuation(c); }

}  // namespace

bool is_ascii_punctuation(char c) noexcept {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
           (c >= '{' && c <= '~');
}

std::string normalize_answer(std::string_view raw) {
    std::string lowered(raw);
    for (char& c : lowered) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }

    std::string text;
    text.reserve(lowered.size());
    for (std::size_t i = 0; i < lowered.size(); ++i) {
        const bool digit_comma = lowered[i] == ',' && !text.empty() && is_digit(text.back()) &&
                                 i + 1 < lowered.size() && is_digit(lowered[i + 1]);
        if (!digit_comma) text.push_back(lowered[i]);
    }

    // Number words are matched against whole runs of word characters, the
    // same units that survive as tokens once punctuation becomes whitespace.
    std::string numbered;
    numbered.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        if (!is_word_char(text[i])) {
            numbered.push_back(text[i++]);
            continue;
        }
        std::size_t end = i;
        while (end < text.size() && is_word_char(text[end])) ++end;
        const std::string_view word(text.data() + i, end - i);
        const auto hit = std::find(kNumberWords.begin(), kNumberWords.end(), word);
        if (hit != kNumberWords.end()) {
            numbered += std::to_string(hit - kNumberWords.begin());
        } else {
            numbered.append(word);
        }
        i = end;
    }

    for (char& c : numbered) {
        if (is_ascii_punctuation(c)) c = ' ';
    }

    std::string result;
    result.reserve(numbered.size());
    for (std::size_t i = 0; i < numbered.size();) {
        if (is_space(numbered[i])) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < numbered.size() && !is_space(numbered[end])) ++end;
        const std::string_view token(numbered.data() + i, end - i);
        if (token != "a" && token != "an" && token != "the") {
            if (!result.empty()) result.push_back(' ');
            result.append(token);
        }
        i = end;
    }
    return result;
}

AnswerCounts count_answers(std::span<const std::string> raw_answers) {
    AnswerCounts counts;
    for (const auto& raw : raw_answers) ++counts[normalize_answer(raw)];
    return counts;
}

ValidAnswerSet valid_answers(std::span<const std::string> raw_answers, std::size_t m) {
    if (raw_answers.empty()) throw InvalidThreshold("no answers to threshold");
    if (m < 1 || m > raw_answers.size()) {
        throw InvalidThreshold("threshold m=" + std::to_string(m) + " outside [1, " +
                               std::to_string(raw_answers.size()) + "]");
    }
    ValidAnswerSet result;
    result.m = m;
    result.counts = count_answers(raw_answers);
    for (const auto& [answer, count] : result.counts) {
        if (count >= m) result.answers.push_back(answer);
    }
    return result;
}

std::string_view to_string(AgreementLabel label) noexcept {
    return label == AgreementLabel::Agreement ? "agreement" : "disagreement";
}

std::size_t modal_count(std::span<const std::string> raw_answers) {
    std::size_t best = 0;
    for (const auto& [answer, count] : count_answers(raw_answers)) best = std::max(best, count);
    return best;
}

AgreementLabel agreement_label(std::span<const std::string> raw_answers, std::size_t expected_answers) {
    if (expected_answers < 2 || raw_answers.size() != expected_answers) {
        throw AnswerCountMismatch("expected " + std::to_string(expected_answers) + " answers, got " +
                                  std::to_string(raw_answers.size()));
    }
    return modal_count(raw_answers) + 1 >= expected_answers ? AgreementLabel::Agreement
                                                            : AgreementLabel::Disagreement;
}

std::vector<std::size_t> diversity_histogram(const Corpus& corpus, std::size_t m) {
    const std::size_t a = corpus.answers_per_question();
    if (m < 1 || m > a) {
        throw InvalidThreshold("threshold m=" + std::to_string(m) + " outside [1, " + std::to_string(a) + "]");
    }
    std::vector<std::size_t> histogram(a + 1, 0);
    for (const auto& q : corpus.questions()) ++histogram[valid_answers(q.raw_answers, m).answers.size()];
    return histogram;
}

std::map<std::string, AgreementRates> agreement_by_answer_type(const Corpus& corpus) {
    struct Tally {
        std::size_t unanimous = 0, exactly_one = 0, n = 0;
    };
    std::map<std::string, Tally> tallies;
    tallies["all"];
    const std::size_t a = corpus.answers_per_question();
    for (const auto& q : corpus.questions()) {
        const std::size_t modal = modal_count(q.raw_answers);
        const std::string stratum = q.answer_type ? std::string(to_string(*q.answer_type)) : "unknown";
        for (const auto& key : {stratum, std::string("all")}) {
            auto& t = tallies[key];
            ++t.n;
            if (modal == a) ++t.unanimous;
            if (modal + 1 == a) ++t.exactly_one;
        }
    }
    std::map<std::string, AgreementRates> rates;
    for (const auto& [key, t] : tallies) {
        AgreementRates r;
        r.n = t.n;
        if (t.n > 0) {
            const double n = static_cast<double>(t.n);
            r.unanimous = static_cast<double>(t.unanimous) / n;
            r.exactly_one_disagreement = static_cast<double>(t.exactly_one) / n;
            r.at_most_one_disagreement = static_cast<double>(t.unanimous + t.exactly_one) / n;
        }
        rates.emplace(key, r);
    }
    return rates;
}

}  // namespace crowdcons
