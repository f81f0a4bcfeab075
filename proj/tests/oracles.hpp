#pragma once

#include <bit>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "crowdcons/answers.hpp"

namespace crowdcons::testing {

// Quadratic reference: for each positive, precision over everything scored at
// least as high as it.
inline double brute_force_ap(const std::vector<double>& s, const std::vector<AgreementLabel>& y) {
    double total = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != AgreementLabel::Disagreement) continue;
        ++positives;
        std::size_t above = 0, above_pos = 0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (s[j] >= s[i]) {
                ++above;
                above_pos += y[j] == AgreementLabel::Disagreement;
            }
        }
        total += double(above_pos) / double(above);
    }
    return total / double(positives);
}

// Average over every size-`draws` subset of the stored answers of the number
// of distinct truth answers it contains.
inline double enumerate_capture(const std::vector<std::string>& answers, std::size_t draws) {
    const auto counts = count_answers(answers);
    const std::size_t n = answers.size();
    double total = 0.0;
    std::size_t subsets = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != draws) continue;
        std::set<std::string> seen;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(mask >> i & 1u)) continue;
            const auto norm = normalize_answer(answers[i]);
            if (counts.at(norm) >= 2) seen.insert(norm);
        }
        total += double(seen.size());
        ++subsets;
    }
    return total / double(subsets);
}

}  // namespace crowdcons::testing
