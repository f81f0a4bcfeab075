#include "crowdcons/features.hpp"

#include <json.hpp>

#include "crowdcons/answers.hpp"
#include "crowdcons/error.hpp"
#include "io_util.hpp"

namespace crowdcons {

std::vector<std::string> tokenize_question(std::string_view question_text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : question_text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (is_ascii_punctuation(c)) continue;
        if (c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r') {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    if (tokens.empty()) throw EmptyQuestion("question has no words: '" + std::string(question_text) + "'");
    return tokens;
}

Vocabularies::Vocabularies(std::vector<std::string> first, std::vector<std::string> second,
                           std::string built_from)
    : first_(std::move(first)), second_(std::move(second)), built_from_(std::move(built_from)) {
    for (std::size_t i = 0; i < first_.size(); ++i) {
        if (!first_lookup_.emplace(first_[i], i).second) throw ParseError("duplicate first word '" + first_[i] + "'");
    }
    for (std::size_t i = 0; i < second_.size(); ++i) {
        if (!second_lookup_.emplace(second_[i], i).second) {
            throw ParseError("duplicate second word '" + second_[i] + "'");
        }
    }
}

std::optional<std::size_t> Vocabularies::first_index(std::string_view word) const {
    const auto it = first_lookup_.find(std::string(word));
    if (it == first_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Vocabularies::second_index(std::string_view word) const {
    const auto it = second_lookup_.find(std::string(word));
    if (it == second_lookup_.end()) return std::nullopt;
    return it->second;
}

Vocabularies build_vocabularies(const Corpus& training_corpus) {
    if (training_corpus.empty()) throw EmptyTrainingSet("cannot build vocabularies from an empty corpus");
    std::vector<std::string> first, second;
    std::unordered_map<std::string, std::size_t> seen_first, seen_second;
    for (const auto& q : training_corpus.questions()) {
        std::vector<std::string> tokens;
        try {
            tokens = tokenize_question(q.question_text);
        } catch (const EmptyQuestion&) {
            throw EmptyQuestion("question " + std::to_string(q.question_id) + " has no words");
        }
        if (seen_first.emplace(tokens[0], first.size()).second) first.push_back(tokens[0]);
        if (tokens.size() >= 2 && seen_second.emplace(tokens[1], second.size()).second) {
            second.push_back(tokens[1]);
        }
    }
    return Vocabularies(std::move(first), std::move(second), training_corpus.source_tag());
}

void save_vocabularies(const Vocabularies& vocab, const std::filesystem::path& path) {
    const nlohmann::json doc = {
        {"first", vocab.first()}, {"second", vocab.second()}, {"built_from", vocab.built_from()}};
    auto out = detail::open_output(path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

Vocabularies load_vocabularies(const std::filesystem::path& path) {
    const auto text = detail::read_file(path);
    try {
        const auto doc = nlohmann::json::parse(text);
        return Vocabularies(doc.at("first").get<std::vector<std::string>>(),
                            doc.at("second").get<std::vector<std::string>>(),
                            doc.value("built_from", std::string()));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string_view to_string(FeatureMode mode) noexcept {
    switch (mode) {
        case FeatureMode::Q: return "q";
        case FeatureMode::I: return "i";
        case FeatureMode::QI: return "qi";
    }
    return "qi";
}

std::optional<FeatureMode> parse_feature_mode(std::string_view text) noexcept {
    if (text == "q" || text == "Q") return FeatureMode::Q;
    if (text == "i" || text == "I") return FeatureMode::I;
    if (text == "qi" || text == "QI" || text == "q+i" || text == "Q+I") return FeatureMode::QI;
    return std::nullopt;
}

std::string_view to_string(FeatureLayout layout) noexcept {
    return layout == FeatureLayout::Truncated ? "truncated" : "zeroed";
}

std::optional<FeatureLayout> parse_feature_layout(std::string_view text) noexcept {
    if (text == "truncated") return FeatureLayout::Truncated;
    if (text == "zeroed") return FeatureLayout::Zeroed;
    return std::nullopt;
}

std::size_t full_dimension(const Vocabularies& vocab) noexcept {
    return 1 + vocab.first().size() + vocab.second().size() + kSaliencyDims;
}

std::size_t feature_dimension(const Vocabularies& vocab, FeatureMode mode, FeatureLayout layout) noexcept {
    if (layout == FeatureLayout::Zeroed || mode == FeatureMode::QI) return full_dimension(vocab);
    if (mode == FeatureMode::Q) return full_dimension(vocab) - kSaliencyDims;
    return kSaliencyDims;
}

FeatureVector extract_features(const VisualQuestion& vq, const Vocabularies& vocab,
                               const ImageFeatureTable& images, FeatureMode mode, FeatureLayout layout) {
    const auto tokens = tokenize_question(vq.question_text);
    const bool use_question = mode != FeatureMode::I;
    const bool use_image = mode != FeatureMode::Q;
    const bool keep_question_block = use_question || layout == FeatureLayout::Zeroed;

    FeatureVector out(feature_dimension(vocab, mode, layout), 0.0);
    std::size_t offset = 0;
    if (keep_question_block) {
        if (use_question) {
            out[0] = static_cast<double>(tokens.size());
            if (const auto i = vocab.first_index(tokens[0])) out[1 + *i] = 1.0;
            if (tokens.size() >= 2) {
                if (const auto j = vocab.second_index(tokens[1])) out[1 + vocab.first().size() + *j] = 1.0;
            }
        }
        offset = 1 + vocab.first().size() + vocab.second().size();
    }
    if (use_image) {
        const auto& sos = images.lookup(vq.image_id);
        for (std::size_t k = 0; k < kSaliencyDims; ++k) out[offset + k] = sos[k];
    }
    return out;
}

void FeatureMatrix::append(std::span<const double> row) {
    if (row.size() != cols_) {
        throw DimensionMismatch("row has " + std::to_string(row.size()) + " features, expected " +
                                std::to_string(cols_));
    }
    values_.insert(values_.end(), row.begin(), row.end());
}

FeatureMatrix extract_matrix(const Corpus& corpus, const Vocabularies& vocab, const ImageFeatureTable& images,
                             FeatureMode mode, FeatureLayout layout) {
    FeatureMatrix matrix(feature_dimension(vocab, mode, layout));
    for (const auto& q : corpus.questions()) {
        try {
            matrix.append(extract_features(q, vocab, images, mode, layout));
        } catch (const EmptyQuestion&) {
            throw EmptyQuestion("question " + std::to_string(q.question_id) + " has no words");
        }
    }
    return matrix;
}

void write_feature_csv(const Corpus& corpus, const FeatureMatrix& matrix, const std::filesystem::path& path) {
    if (matrix.rows() != corpus.size()) throw LengthMismatch("feature matrix rows do not match corpus size");
    auto out = detail::open_output(path);
    out << "question_id";
    for (std::size_t c = 0; c < matrix.cols(); ++c) out << ",f" << c;
    out << '\n';
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        out << corpus.questions()[r].question_id;
        for (const double v : matrix.row(r)) out << ',' << detail::format_double(v);
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace crowdcons
