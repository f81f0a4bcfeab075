#include <doctest.h>

#include <cmath>
#include <numeric>

#include "crowdcons/corpus.hpp"
#include "crowdcons/error.hpp"
#include "crowdcons/synthetic.hpp"
#include "test_util.hpp"

using namespace crowdcons;
using crowdcons::testing::TempDir;
using crowdcons::testing::write_text;

namespace {

const char* kThreeRecords =
    R"({"question_id": 3, "image_id": 30, "question": "Is it red?", "answers": ["yes","yes","yes","yes","yes","yes","yes","yes","yes","no"], "answer_type": "yes/no"}
{"question_id": 1, "image_id": 10, "question": "How many dogs?", "answers": ["2","2","two","2","3","2","2","2","2","2"], "answer_type": "number"}

{"question_id": 2, "image_id": 20, "question": "Why?", "answers": ["a","b","c","d","e","f","g","h","i","j"]}
)";

std::string vqa_questions() {
    return R"({"questions": [
        {"question_id": 5, "image_id": 50, "question": "What color?"},
        {"question_id": 4, "image_id": 40, "question": "Is this a cat?"}]})";
}

std::string vqa_annotation(int id, const char* type, int count) {
    std::string answers;
    for (int i = 0; i < count; ++i) answers += std::string(i ? "," : "") + R"({"answer": "x", "answer_id": )" + std::to_string(i + 1) + "}";
    return R"({"question_id": )" + std::to_string(id) + R"(, "answer_type": ")" + type + R"(", "answers": [)" + answers + "]}";
}

}  // namespace

TEST_CASE("jsonl corpus loads and orders by question id") {
    TempDir dir;
    write_text(dir / "c.jsonl", kThreeRecords);
    const auto corpus = load_corpus(dir / "c.jsonl", std::nullopt);
    REQUIRE(corpus.size() == 3);
    CHECK(corpus.answers_per_question() == 10);
    CHECK(corpus.questions()[0].question_id == 1);
    CHECK(corpus.questions()[2].question_id == 3);
    CHECK(corpus.at(3).answer_type == AnswerType::YesNo);
    CHECK_FALSE(corpus.at(2).answer_type.has_value());
    CHECK(corpus.at(1).image_id == 10);
    CHECK_THROWS_AS(corpus.at(99), KeyMismatch);
}

TEST_CASE("loading twice is deterministic and jsonl export round-trips") {
    TempDir dir;
    write_text(dir / "c.jsonl", kThreeRecords);
    const auto a = load_corpus(dir / "c.jsonl", std::nullopt);
    const auto b = load_corpus(dir / "c.jsonl", std::nullopt);
    CHECK(a == b);
    write_jsonl(a, dir / "out.jsonl");
    CHECK(load_corpus(dir / "out.jsonl", std::nullopt) == a);

    const auto synthetic = make_random_corpus(40, 10, 3).corpus;
    write_jsonl(synthetic, dir / "synthetic.jsonl");
    LoadOptions options;
    options.source_tag = "synthetic";
    CHECK(load_corpus(dir / "synthetic.jsonl", std::nullopt, options) == synthetic);
}

TEST_CASE("answer count mismatch is an error unless malformed records are skipped") {
    TempDir dir;
    write_text(dir / "c.jsonl", std::string(kThreeRecords) +
                                    R"({"question_id": 9, "image_id": 1, "question": "q", "answers": ["a","b"]})" "\n");
    CHECK_THROWS_AS(load_corpus(dir / "c.jsonl", std::nullopt), AnswerCountMismatch);
    LoadOptions options;
    options.skip_malformed = true;
    const auto corpus = load_corpus(dir / "c.jsonl", std::nullopt, options);
    CHECK(corpus.size() == 3);
    CHECK(corpus.skipped_malformed() == 1);
}

TEST_CASE("jsonl parse errors") {
    TempDir dir;
    write_text(dir / "bad.jsonl", "{not json}\n");
    CHECK_THROWS_AS(load_corpus(dir / "bad.jsonl", std::nullopt), ParseError);
    write_text(dir / "noid.jsonl", R"({"image_id": 1, "question": "q", "answers": []})" "\n");
    CHECK_THROWS_AS(load_corpus(dir / "noid.jsonl", std::nullopt), ParseError);
    write_text(dir / "type.jsonl",
               R"({"question_id": 1, "image_id": 1, "question": "q", "answers": ["a","a","a","a","a","a","a","a","a","a"], "answer_type": "colour"})" "\n");
    CHECK_THROWS_AS(load_corpus(dir / "type.jsonl", std::nullopt), ParseError);
    write_text(dir / "dup.jsonl", std::string(kThreeRecords) + std::string(kThreeRecords).substr(0, std::string(kThreeRecords).find('\n') + 1));
    CHECK_THROWS_AS(load_corpus(dir / "dup.jsonl", std::nullopt), ParseError);
    CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl", std::nullopt), IoError);
}

TEST_CASE("vqa v1 questions and annotations pair up") {
    TempDir dir;
    write_text(dir / "q.json", vqa_questions());
    write_text(dir / "a.json", R"({"annotations": [)" + vqa_annotation(4, "yes/no", 10) + "," +
                                   vqa_annotation(5, "other", 10) + "]}");
    LoadOptions options;
    options.format = CorpusFormat::VqaV1Json;
    const auto corpus = load_corpus(dir / "q.json", dir / "a.json", options);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus.questions()[0].question_id == 4);
    CHECK(corpus.questions()[0].question_text == "Is this a cat?");
    CHECK(corpus.questions()[0].answer_type == AnswerType::YesNo);
    CHECK(corpus.at(5).image_id == 50);
    CHECK(corpus.at(5).raw_answers.size() == 10);

    CHECK_THROWS_AS(load_corpus(dir / "q.json", std::nullopt, options), IoError);
}

TEST_CASE("vqa v1 question without annotation is MissingAnnotation") {
    TempDir dir;
    write_text(dir / "q.json", vqa_questions());
    write_text(dir / "a.json", R"({"annotations": [)" + vqa_annotation(4, "yes/no", 10) + "]}");
    LoadOptions options;
    options.format = CorpusFormat::VqaV1Json;
    CHECK_THROWS_AS(load_corpus(dir / "q.json", dir / "a.json", options), MissingAnnotation);

    write_text(dir / "a9.json", R"({"annotations": [)" + vqa_annotation(4, "yes/no", 9) + "," +
                                    vqa_annotation(5, "other", 10) + "]}");
    CHECK_THROWS_AS(load_corpus(dir / "q.json", dir / "a9.json", options), AnswerCountMismatch);
    options.skip_malformed = true;
    CHECK(load_corpus(dir / "q.json", dir / "a9.json", options).size() == 1);
}

TEST_CASE("image feature rows are validated and renormalized") {
    TempDir dir;
    write_text(dir / "f.csv", "image_id,p0,p1,p2,p3,p4\n7,0.1,0.2,0.3,0.2,0.2\n9,0.1,0.2,0.3,0.2,0.2005\n");
    const auto table = load_image_features(dir / "f.csv");
    const auto& row = table.lookup(7);
    CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    const auto& shifted = table.lookup(9);
    CHECK(std::fabs(std::accumulate(shifted.begin(), shifted.end(), 0.0) - 1.0) < 1e-6);
    CHECK(shifted[4] < 0.2005);

    CHECK(table.lookup(12345) == kUniformSaliency);
    CHECK_FALSE(table.contains(12345));
}

TEST_CASE("image feature errors") {
    TempDir dir;
    write_text(dir / "neg.csv", "image_id,p0,p1,p2,p3,p4\n8,-0.1,0.5,0.3,0.2,0.1\n");
    CHECK_THROWS_AS(load_image_features(dir / "neg.csv"), InvalidProbability);
    write_text(dir / "sum.csv", "image_id,p0,p1,p2,p3,p4\n8,0.3,0.5,0.3,0.2,0.1\n");
    CHECK_THROWS_AS(load_image_features(dir / "sum.csv"), InvalidProbability);
    write_text(dir / "hdr.csv", "id,a,b,c,d,e\n");
    CHECK_THROWS_AS(load_image_features(dir / "hdr.csv"), ParseError);
    write_text(dir / "short.csv", "image_id,p0,p1,p2,p3,p4\n8,0.5,0.5\n");
    CHECK_THROWS_AS(load_image_features(dir / "short.csv"), ParseError);
    write_text(dir / "text.csv", "image_id,p0,p1,p2,p3,p4\n8,a,0.5,0,0,0\n");
    CHECK_THROWS_AS(load_image_features(dir / "text.csv"), ParseError);
}

TEST_CASE("image feature table round-trips through CSV") {
    TempDir dir;
    const auto data = make_random_corpus(30, 10, 11);
    std::vector<ImageId> images;
    for (ImageId i = 0; i < 13; ++i) images.push_back(i);
    write_image_features(data.images, images, dir / "f.csv");
    const auto loaded = load_image_features(dir / "f.csv");
    for (const auto id : images) {
        for (std::size_t k = 0; k < 5; ++k) CHECK(loaded.lookup(id)[k] == doctest::Approx(data.images.lookup(id)[k]).epsilon(1e-15));
    }
}
