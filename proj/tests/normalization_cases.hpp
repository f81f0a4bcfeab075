#pragma once

#include <array>
#include <string_view>

namespace crowdcons::testing {

struct NormalizationCase {
    std::string_view raw;
    std::string_view expected;
};

// Case folding, articles, number words, punctuation and commas inside digits.
inline constexpr std::array<NormalizationCase, 50> kNormalizationCases{{
    {"The Cat!", "cat"},
    {"Two", "2"},
    {"  YES  ", "yes"},
    {"1,000", "1000"},
    {"yes", "yes"},
    {"No.", "no"},
    {"A dog", "dog"},
    {"an apple", "apple"},
    {"the", ""},
    {"theater", "theater"},
    {"someone", "someone"},
    {"Ten", "10"},
    {"zero", "0"},
    {"three dogs", "3 dogs"},
    {"1,000,000", "1000000"},
    {"12,5", "125"},
    {"red, white", "red white"},
    {"hello,world", "hello world"},
    {"it's", "it s"},
    {"don't know", "don t know"},
    {"Eleven", "eleven"},
    {"twenty-two", "twenty 2"},
    {"two-three", "2 3"},
    {"a.m.", "m"},
    {"ONE", "1"},
    {"one.", "1"},
    {"(two)", "2"},
    {"Anne", "anne"},
    {"A", ""},
    {"", ""},
    {"!!!", ""},
    {"  multiple   spaces  ", "multiple spaces"},
    {"tab\there", "tab here"},
    {"line\nbreak", "line break"},
    {"The The the", ""},
    {"An Apple A Day", "apple day"},
    {"3.5", "3 5"},
    {"$100", "100"},
    {"50%", "50"},
    {"fourteen", "fourteen"},
    {"nine lives", "9 lives"},
    {"Eight!", "8"},
    {"one hundred", "1 hundred"},
    {"SEVEN", "7"},
    {"there", "there"},
    {"them", "them"},
    {"a lot", "lot"},
    {"i don't know.", "i don t know"},
    {"1, 2", "1 2"},
    {"five,six", "5 6"},
}};

}  // namespace crowdcons::testing
