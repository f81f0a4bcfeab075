#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace crowdcons {

using QuestionId = std::int64_t;
using ImageId = std::int64_t;

enum class AnswerType { YesNo, Number, Other };

std::string_view to_string(AnswerType type) noexcept;
/// Parses "yes/no", "number" or "other"; std::nullopt otherwise.
std::optional<AnswerType> parse_answer_type(std::string_view text) noexcept;

struct VisualQuestion {
    QuestionId question_id = 0;
    ImageId image_id = 0;
    std::string question_text;
    std::vector<std::string> raw_answers;
    std::optional<AnswerType> answer_type;

    bool operator==(const VisualQuestion&) const = default;
};

inline constexpr std::size_t kDefaultAnswersPerQuestion = 10;

/// Immutable collection of visual questions sharing one answers-per-question
/// count A, ordered by ascending question_id.
class Corpus {
public:
    Corpus() = default;
    /// Sorts by question_id and validates ids and answer counts.
    Corpus(std::vector<VisualQuestion> questions, std::size_t answers_per_question,
           std::string source_tag, std::size_t skipped_malformed = 0);

    const std::vector<VisualQuestion>& questions() const noexcept { return questions_; }
    std::size_t size() const noexcept { return questions_.size(); }
    bool empty() const noexcept { return questions_.empty(); }
    std::size_t answers_per_question() const noexcept { return answers_per_question_; }
    const std::string& source_tag() const noexcept { return source_tag_; }
    /// Number of records dropped by a skip-malformed load.
    std::size_t skipped_malformed() const noexcept { return skipped_malformed_; }

    const VisualQuestion& at(QuestionId id) const;
    bool contains(QuestionId id) const noexcept { return index_.contains(id); }

    /// Sub-corpus holding the questions at the given positions (order kept by id).
    Corpus subset(const std::vector<std::size_t>& positions) const;

    bool operator==(const Corpus& other) const {
        return answers_per_question_ == other.answers_per_question_ &&
               source_tag_ == other.source_tag_ && questions_ == other.questions_;
    }

private:
    std::vector<VisualQuestion> questions_;
    std::size_t answers_per_question_ = kDefaultAnswersPerQuestion;
    std::string source_tag_;
    std::size_t skipped_malformed_ = 0;
    std::unordered_map<QuestionId, std::size_t> index_;
};

enum class CorpusFormat { VqaV1Json, Jsonl };

std::optional<CorpusFormat> parse_corpus_format(std::string_view text) noexcept;
std::string_view to_string(CorpusFormat format) noexcept;

struct LoadOptions {
    CorpusFormat format = CorpusFormat::Jsonl;
    std::size_t answers_per_question = kDefaultAnswersPerQuestion;
    bool skip_malformed = false;
    std::string source_tag = "real";
};

/// Loads a corpus. For VqaV1Json both the questions file and the annotations
/// file are required; Jsonl ignores `annotations`.
Corpus load_corpus(const std::filesystem::path& questions,
                   const std::optional<std::filesystem::path>& annotations,
                   const LoadOptions& options = {});

/// Writes one JSON record per line in the Jsonl format.
void write_jsonl(const Corpus& corpus, const std::filesystem::path& path);

using SaliencyVector = std::array<double, 5>;

inline constexpr SaliencyVector kUniformSaliency{0.2, 0.2, 0.2, 0.2, 0.2};

/// Salient-object-count probabilities (0, 1, 2, 3, 4+ objects) per image.
class ImageFeatureTable {
public:
    ImageFeatureTable() = default;

    /// Validates and renormalizes. Throws InvalidProbability for negative
    /// components or a row sum outside [1 - 1e-3, 1 + 1e-3].
    void insert(ImageId image, SaliencyVector probabilities);

    /// Missing images fall back to the uniform vector.
    const SaliencyVector& lookup(ImageId image) const noexcept;
    bool contains(ImageId image) const noexcept { return rows_.contains(image); }
    std::size_t size() const noexcept { return rows_.size(); }

private:
    std::unordered_map<ImageId, SaliencyVector> rows_;
};

/// Reads a CSV with header `image_id,p0,p1,p2,p3,p4`.
ImageFeatureTable load_image_features(const std::filesystem::path& path);

void write_image_features(const ImageFeatureTable& table, const std::vector<ImageId>& images,
                          const std::filesystem::path& path);

}  // namespace crowdcons
