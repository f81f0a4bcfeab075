#include "crowdcons/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "crowdcons/error.hpp"
#include "io_util.hpp"

namespace crowdcons {

using nlohmann::json;

std::string_view to_string(AnswerType type) noexcept {
    switch (type) {
        case AnswerType::YesNo: return "yes/no";
        case AnswerType::Number: return "number";
        case AnswerType::Other: return "other";
    }
    return "other";
}

std::optional<AnswerType> parse_answer_type(std::string_view text) noexcept {
    if (text == "yes/no") return AnswerType::YesNo;
    if (text == "number") return AnswerType::Number;
    if (text == "other") return AnswerType::Other;
    return std::nullopt;
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view text) noexcept {
    if (text == "vqa_v1_json") return CorpusFormat::VqaV1Json;
    if (text == "jsonl") return CorpusFormat::Jsonl;
    return std::nullopt;
}

std::string_view to_string(CorpusFormat format) noexcept {
    return format == CorpusFormat::VqaV1Json ? "vqa_v1_json" : "jsonl";
}

Corpus::Corpus(std::vector<VisualQuestion> questions, std::size_t answers_per_question,
               std::string source_tag, std::size_t skipped_malformed)
    : questions_(std::move(questions)),
      answers_per_question_(answers_per_question),
      source_tag_(std::move(source_tag)),
      skipped_malformed_(skipped_malformed) {
    if (answers_per_question_ == 0) throw InvalidConfig("answers per question must be positive");
    std::stable_sort(questions_.begin(), questions_.end(),
                     [](const auto& a, const auto& b) { return a.question_id < b.question_id; });
    index_.reserve(questions_.size());
    for (std::size_t i = 0; i < questions_.size(); ++i) {
        const auto& q = questions_[i];
        if (q.raw_answers.size() != answers_per_question_) {
            throw AnswerCountMismatch("question " + std::to_string(q.question_id) + " has " +
                                      std::to_string(q.raw_answers.size()) + " answers, expected " +
                                      std::to_string(answers_per_question_));
        }
        if (!index_.emplace(q.question_id, i).second) {
            throw ParseError("duplicate question_id " + std::to_string(q.question_id));
        }
    }
}

const VisualQuestion& Corpus::at(QuestionId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw KeyMismatch("unknown question_id " + std::to_string(id));
    return questions_[it->second];
}

Corpus Corpus::subset(const std::vector<std::size_t>& positions) const {
    std::vector<VisualQuestion> picked;
    picked.reserve(positions.size());
    for (const auto pos : positions) picked.push_back(questions_.at(pos));
    return Corpus(std::move(picked), answers_per_question_, source_tag_);
}

namespace {

std::int64_t require_int(const json& object, const char* key, const std::string& where) {
    const auto it = object.find(key);
    if (it == object.end() || !it->is_number_integer()) {
        throw ParseError(where + ": missing or non-integer '" + key + "'");
    }
    return it->get<std::int64_t>();
}

std::string require_string(const json& object, const char* key, const std::string& where) {
    const auto it = object.find(key);
    if (it == object.end() || !it->is_string()) {
        throw ParseError(where + ": missing or non-string '" + key + "'");
    }
    return it->get<std::string>();
}

std::optional<AnswerType> optional_answer_type(const json& object, const std::string& where) {
    const auto it = object.find("answer_type");
    if (it == object.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(where + ": answer_type must be a string");
    const auto parsed = parse_answer_type(it->get_ref<const std::string&>());
    if (!parsed) throw ParseError(where + ": unknown answer_type '" + it->get<std::string>() + "'");
    return parsed;
}

json parse_json_file(const std::filesystem::path& path) {
    const auto text = detail::read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// Shared by both formats: drop or reject records whose answer count differs from A.
bool accept_answer_count(const VisualQuestion& q, const LoadOptions& options, std::size_t& skipped) {
    if (q.raw_answers.size() == options.answers_per_question) return true;
    if (options.skip_malformed) {
        ++skipped;
        return false;
    }
    throw AnswerCountMismatch("question " + std::to_string(q.question_id) + " has " +
                              std::to_string(q.raw_answers.size()) + " answers, expected " +
                              std::to_string(options.answers_per_question));
}

Corpus load_jsonl(const std::filesystem::path& path, const LoadOptions& options) {
    auto in = detail::open_input(path);
    std::vector<VisualQuestion> questions;
    std::size_t skipped = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!record.is_object()) throw ParseError(where + ": record is not an object");
        VisualQuestion q;
        q.question_id = require_int(record, "question_id", where);
        q.image_id = require_int(record, "image_id", where);
        q.question_text = require_string(record, "question", where);
        q.answer_type = optional_answer_type(record, where);
        const auto answers = record.find("answers");
        if (answers == record.end() || !answers->is_array()) {
            throw MissingAnnotation(where + ": question " + std::to_string(q.question_id) +
                                    " has no answers array");
        }
        for (const auto& a : *answers) {
            if (!a.is_string()) throw ParseError(where + ": answers must be strings");
            q.raw_answers.push_back(a.get<std::string>());
        }
        if (accept_answer_count(q, options, skipped)) questions.push_back(std::move(q));
    }
    return Corpus(std::move(questions), options.answers_per_question, options.source_tag, skipped);
}

Corpus load_vqa_v1(const std::filesystem::path& questions_path,
                   const std::filesystem::path& annotations_path, const LoadOptions& options) {
    const json questions_doc = parse_json_file(questions_path);
    const json annotations_doc = parse_json_file(annotations_path);
    const auto qs = questions_doc.find("questions");
    const auto as = annotations_doc.find("annotations");
    if (!questions_doc.is_object() || qs == questions_doc.end() || !qs->is_array()) {
        throw ParseError(questions_path.string() + ": expected a 'questions' array");
    }
    if (!annotations_doc.is_object() || as == annotations_doc.end() || !as->is_array()) {
        throw ParseError(annotations_path.string() + ": expected an 'annotations' array");
    }

    struct Annotation {
        std::vector<std::string> answers;
        std::optional<AnswerType> type;
    };
    std::unordered_map<QuestionId, Annotation> by_id;
    by_id.reserve(as->size());
    for (std::size_t i = 0; i < as->size(); ++i) {
        const auto& a = (*as)[i];
        const std::string where = annotations_path.string() + ": annotations[" + std::to_string(i) + "]";
        if (!a.is_object()) throw ParseError(where + " is not an object");
        Annotation annotation;
        annotation.type = optional_answer_type(a, where);
        const auto answers = a.find("answers");
        if (answers == a.end() || !answers->is_array()) throw ParseError(where + ": missing answers");
        for (const auto& entry : *answers) {
            if (!entry.is_object()) throw ParseError(where + ": answer entry is not an object");
            annotation.answers.push_back(require_string(entry, "answer", where));
        }
        const auto id = require_int(a, "question_id", where);
        if (!by_id.emplace(id, std::move(annotation)).second) {
            throw ParseError(where + ": duplicate annotation for question " + std::to_string(id));
        }
    }

    std::vector<VisualQuestion> questions;
    questions.reserve(qs->size());
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < qs->size(); ++i) {
        const auto& record = (*qs)[i];
        const std::string where = questions_path.string() + ": questions[" + std::to_string(i) + "]";
        if (!record.is_object()) throw ParseError(where + " is not an object");
        VisualQuestion q;
        q.question_id = require_int(record, "question_id", where);
        q.image_id = require_int(record, "image_id", where);
        q.question_text = require_string(record, "question", where);
        auto it = by_id.find(q.question_id);
        if (it == by_id.end()) {
            throw MissingAnnotation("no annotation for question " + std::to_string(q.question_id));
        }
        q.raw_answers = std::move(it->second.answers);
        q.answer_type = it->second.type;
        if (accept_answer_count(q, options, skipped)) questions.push_back(std::move(q));
    }
    return Corpus(std::move(questions), options.answers_per_question, options.source_tag, skipped);
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& questions,
                   const std::optional<std::filesystem::path>& annotations, const LoadOptions& options) {
    if (options.answers_per_question < 2) throw InvalidConfig("answers per question must be >= 2");
    if (options.format == CorpusFormat::Jsonl) return load_jsonl(questions, options);
    if (!annotations) throw IoError("vqa_v1_json format requires an annotations file");
    return load_vqa_v1(questions, *annotations, options);
}

void write_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    for (const auto& q : corpus.questions()) {
        json record = {{"question_id", q.question_id},
                       {"image_id", q.image_id},
                       {"question", q.question_text},
                       {"answers", q.raw_answers}};
        if (q.answer_type) record["answer_type"] = std::string(to_string(*q.answer_type));
        out << record.dump() << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void ImageFeatureTable::insert(ImageId image, SaliencyVector probabilities) {
    double sum = 0.0;
    for (const double p : probabilities) {
        if (!(p >= 0.0)) {
            throw InvalidProbability("image " + std::to_string(image) + ": negative or NaN probability");
        }
        sum += p;
    }
    if (!(std::fabs(sum - 1.0) <= 1e-3)) {
        throw InvalidProbability("image " + std::to_string(image) + ": probabilities sum to " +
                                 detail::format_double(sum));
    }
    for (double& p : probabilities) p /= sum;
    rows_[image] = probabilities;
}

const SaliencyVector& ImageFeatureTable::lookup(ImageId image) const noexcept {
    const auto it = rows_.find(image);
    return it == rows_.end() ? kUniformSaliency : it->second;
}

ImageFeatureTable load_image_features(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "image_id,p0,p1,p2,p3,p4") {
        throw ParseError(path.string() + ": expected header 'image_id,p0,p1,p2,p3,p4'");
    }
    ImageFeatureTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto fields = detail::split(detail::trim(line), ',');
        if (fields.size() != 6) throw ParseError(where + ": expected 6 fields");
        ImageId image = 0;
        if (!detail::parse_number(fields[0], image)) throw ParseError(where + ": bad image_id");
        if (table.contains(image)) throw ParseError(where + ": duplicate image_id");
        SaliencyVector p{};
        for (std::size_t k = 0; k < 5; ++k) {
            if (!detail::parse_number(fields[k + 1], p[k])) throw ParseError(where + ": bad probability");
        }
        table.insert(image, p);
    }
    return table;
}

void write_image_features(const ImageFeatureTable& table, const std::vector<ImageId>& images,
                          const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    out << "image_id,p0,p1,p2,p3,p4\n";
    for (const auto image : images) {
        out << image;
        for (const double p : table.lookup(image)) out << ',' << detail::format_double(p);
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace crowdcons
