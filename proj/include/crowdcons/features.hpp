#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crowdcons/corpus.hpp"

namespace crowdcons {

/// Lowercase, delete ASCII punctuation, split on whitespace.
/// Throws EmptyQuestion when nothing is left.
std::vector<std::string> tokenize_question(std::string_view question_text);

/// Distinct first-position and second-position question words, in first-seen
/// order over a training corpus.
class Vocabularies {
public:
    Vocabularies() = default;
    Vocabularies(std::vector<std::string> first, std::vector<std::string> second, std::string built_from);

    const std::vector<std::string>& first() const noexcept { return first_; }
    const std::vector<std::string>& second() const noexcept { return second_; }
    const std::string& built_from() const noexcept { return built_from_; }

    std::optional<std::size_t> first_index(std::string_view word) const;
    std::optional<std::size_t> second_index(std::string_view word) const;

    bool operator==(const Vocabularies& other) const {
        return first_ == other.first_ && second_ == other.second_ && built_from_ == other.built_from_;
    }

private:
    std::vector<std::string> first_;
    std::vector<std::string> second_;
    std::string built_from_;
    std::unordered_map<std::string, std::size_t> first_lookup_;
    std::unordered_map<std::string, std::size_t> second_lookup_;
};

/// Throws EmptyQuestion naming the offending question_id.
Vocabularies build_vocabularies(const Corpus& training_corpus);

void save_vocabularies(const Vocabularies& vocab, const std::filesystem::path& path);
Vocabularies load_vocabularies(const std::filesystem::path& path);

/// Which feature blocks are active: question only, image only, or both.
enum class FeatureMode { Q, I, QI };

/// Ablated blocks are either dropped from the vector (Truncated) or kept at
/// zero so the dimension matches the full descriptor (Zeroed).
enum class FeatureLayout { Truncated, Zeroed };

std::string_view to_string(FeatureMode mode) noexcept;
std::optional<FeatureMode> parse_feature_mode(std::string_view text) noexcept;
std::string_view to_string(FeatureLayout layout) noexcept;
std::optional<FeatureLayout> parse_feature_layout(std::string_view text) noexcept;

inline constexpr std::size_t kSaliencyDims = 5;

/// Full descriptor size: length + |V1| + |V2| + 5.
std::size_t full_dimension(const Vocabularies& vocab) noexcept;
std::size_t feature_dimension(const Vocabularies& vocab, FeatureMode mode, FeatureLayout layout) noexcept;

using FeatureVector = std::vector<double>;

/// Layout: [question length | one-hot first word | one-hot second word | saliency].
/// Out-of-vocabulary words and missing second words give all-zero blocks.
FeatureVector extract_features(const VisualQuestion& vq, const Vocabularies& vocab,
                               const ImageFeatureTable& images, FeatureMode mode,
                               FeatureLayout layout = FeatureLayout::Truncated);

/// Dense row-major design matrix.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}

    void append(std::span<const double> row);

    std::size_t rows() const noexcept { return cols_ == 0 ? 0 : values_.size() / cols_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * cols_, cols_};
    }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

private:
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

FeatureMatrix extract_matrix(const Corpus& corpus, const Vocabularies& vocab,
                             const ImageFeatureTable& images, FeatureMode mode,
                             FeatureLayout layout = FeatureLayout::Truncated);

/// Header: question_id,f0,f1,...
void write_feature_csv(const Corpus& corpus, const FeatureMatrix& matrix, const std::filesystem::path& path);

}  // namespace crowdcons
