#include <doctest.h>

#include <cmath>
#include <set>

#include "crowdcons/error.hpp"
#include "crowdcons/forest.hpp"
#include "crowdcons/random.hpp"
#include "crowdcons/synthetic.hpp"
#include "test_util.hpp"

using namespace crowdcons;

namespace {

constexpr auto D = AgreementLabel::Disagreement;
constexpr auto A = AgreementLabel::Agreement;

struct Dataset {
    FeatureMatrix x;
    std::vector<AgreementLabel> y;
};

// feature < 0 -> Agreement, feature > 0 -> Disagreement; a noise column.
Dataset separable(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d{FeatureMatrix(2), {}};
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        while (v == 0.0) v = 2.0 * rng.uniform() - 1.0;
        d.x.append(std::vector<double>{v, rng.uniform()});
        d.y.push_back(v > 0 ? D : A);
    }
    return d;
}

Dataset random_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d{FeatureMatrix(dim), {}};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(dim);
        for (auto& v : row) v = static_cast<double>(rng.below(5));
        d.x.append(row);
        d.y.push_back(rng.below(2) ? D : A);
    }
    return d;
}

DecisionTree leaf(std::uint32_t dis, std::uint32_t total) {
    DecisionTree::Node n;
    n.votes_disagreement = dis;
    n.votes_total = total;
    return DecisionTree({n});
}

}  // namespace

TEST_CASE("gini impurity") {
    CHECK(gini_impurity(5, 5) == 0.5);
    CHECK(gini_impurity(10, 0) == 0.0);
    CHECK(gini_impurity(0, 7) == 0.0);
    CHECK(gini_impurity(3, 1) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK_THROWS_AS(gini_impurity(0, 0), EmptyNode);
}

TEST_CASE("forest config validation") {
    ForestConfig c;
    CHECK(c.resolved_features_per_split(2497) == 50);
    CHECK(c.resolved_features_per_split(1) == 1);
    CHECK(c.resolved_features_per_split(16) == 4);
    c.n_trees = 24;
    CHECK_THROWS_AS(c.resolved_features_per_split(10), InvalidConfig);
    c.n_trees = 0;
    CHECK_THROWS_AS(c.resolved_features_per_split(10), InvalidConfig);
    c.n_trees = 25;
    c.features_per_split = 11;
    CHECK_THROWS_AS(c.resolved_features_per_split(10), InvalidConfig);
    c.features_per_split = 0;
    CHECK_THROWS_AS(c.resolved_features_per_split(10), InvalidConfig);
    c.features_per_split.reset();
    c.min_leaf_size = 0;
    CHECK_THROWS_AS(c.resolved_features_per_split(10), InvalidConfig);
}

TEST_CASE("separable data is fit exactly and generalizes") {
    const auto train = separable(100, 1);
    const auto forest = train_forest(train.x, train.y, {.seed = 7});
    for (std::size_t i = 0; i < train.x.rows(); ++i) CHECK(forest.predict(train.x.row(i)).label == train.y[i]);

    CHECK(forest.predict(std::vector<double>{0.9, 0.5}).p_disagreement == 1.0);
    CHECK(forest.predict(std::vector<double>{-0.9, 0.5}).p_disagreement == 0.0);
    const auto test = separable(200, 2);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.x.rows(); ++i) correct += forest.predict(test.x.row(i)).label == test.y[i];
    CHECK(correct >= 196);
}

TEST_CASE("single-class training data predicts that class with certainty") {
    auto d = separable(50, 3);
    std::fill(d.y.begin(), d.y.end(), A);
    const auto forest = train_forest(d.x, d.y, {});
    for (const auto& tree : forest.trees()) CHECK(tree.nodes().size() == 1);
    const auto p = forest.predict(std::vector<double>{0.3, 0.3});
    CHECK(p.label == A);
    CHECK(p.p_disagreement == 0.0);
}

TEST_CASE("training is deterministic in the seed and independent of threads") {
    const auto d = random_dataset(300, 12, 5);
    const ForestConfig serial{.n_trees = 9, .seed = 42, .threads = 1};
    const ForestConfig parallel{.n_trees = 9, .seed = 42, .threads = 4};
    const auto a = train_forest(d.x, d.y, serial);
    CHECK(a == train_forest(d.x, d.y, serial));
    CHECK(a == train_forest(d.x, d.y, parallel));
    CHECK(a == train_forest(d.x, d.y, {.n_trees = 9, .seed = 42, .threads = 0}));
    CHECK_FALSE(a == train_forest(d.x, d.y, {.n_trees = 9, .seed = 43}));
}

TEST_CASE("every leaf is pure when labels are consistent, including zero-gain XOR nodes") {
    // XOR on two binary features: no single split lowers the impurity.
    Dataset xor_data{FeatureMatrix(2), {}};
    for (int rep = 0; rep < 10; ++rep) {
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                xor_data.x.append(std::vector<double>{double(a), double(b)});
                xor_data.y.push_back(a != b ? D : A);
            }
        }
    }
    const auto xor_forest = train_forest(xor_data.x, xor_data.y, {.n_trees = 5, .features_per_split = 1});
    for (std::size_t i = 0; i < xor_data.x.rows(); ++i) {
        CHECK(xor_forest.predict(xor_data.x.row(i)).label == xor_data.y[i]);
    }

    // Continuous features make duplicate rows with conflicting labels impossible.
    Rng rng(9);
    Dataset d{FeatureMatrix(6), {}};
    for (int i = 0; i < 400; ++i) {
        std::vector<double> row(6);
        for (auto& v : row) v = rng.uniform();
        d.x.append(row);
        d.y.push_back(rng.below(2) ? D : A);
    }
    for (const auto& data : {xor_data, d}) {
        const auto forest = train_forest(data.x, data.y, {.n_trees = 7, .seed = 1});
        for (const auto& tree : forest.trees()) {
            for (const auto& node : tree.nodes()) {
                if (!node.is_leaf()) continue;
                CHECK((node.votes_disagreement == 0 || node.votes_disagreement == node.votes_total));
            }
        }
    }
}

TEST_CASE("leaf size and depth limits hold") {
    const auto d = random_dataset(400, 8, 6);
    const auto forest = train_forest(d.x, d.y, {.n_trees = 5, .min_leaf_size = 7, .max_depth = 4, .seed = 3});
    for (const auto& tree : forest.trees()) {
        CHECK(tree.depth() <= 4);
        for (const auto& node : tree.nodes()) {
            if (node.is_leaf()) CHECK(node.votes_total >= 7);
        }
    }
}

TEST_CASE("votes are quantized and the label follows p > 0.5") {
    const auto d = random_dataset(300, 10, 8);
    const auto forest = train_forest(d.x, d.y, {.n_trees = 11, .max_depth = 3, .seed = 2});
    const auto probe = random_dataset(500, 10, 99);
    std::set<double> seen;
    for (std::size_t i = 0; i < probe.x.rows(); ++i) {
        const auto p = forest.predict(probe.x.row(i));
        const double scaled = p.p_disagreement * 11.0;
        CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
        CHECK(p.disagreement_votes <= 11);
        CHECK((p.label == D) == (p.p_disagreement > 0.5));
        seen.insert(p.p_disagreement);
    }
    CHECK(seen.size() > 2);
}

TEST_CASE("forest vote arithmetic and leaf ties") {
    CHECK(leaf(1, 2).vote(std::vector<double>{0.0}) == D);
    CHECK(leaf(1, 3).vote(std::vector<double>{0.0}) == A);

    std::vector<DecisionTree> trees;
    for (int t = 0; t < 25; ++t) trees.push_back(t < 20 ? leaf(3, 3) : leaf(0, 3));
    const Forest forest(trees, {.n_trees = 25}, 1);
    const auto p = forest.predict(std::vector<double>{0.0});
    CHECK(p.p_disagreement == 0.8);
    CHECK(p.label == D);

    std::vector<DecisionTree> calm(25, leaf(0, 4));
    const auto q = Forest(calm, {.n_trees = 25}, 1).predict(std::vector<double>{0.0});
    CHECK(q.p_disagreement == 0.0);
    CHECK(q.label == A);
}

TEST_CASE("training and prediction errors") {
    const auto d = separable(20, 4);
    CHECK_THROWS_AS(train_forest(FeatureMatrix(2), {}, {}), EmptyTrainingSet);
    CHECK_THROWS_AS(train_forest(d.x, std::vector<AgreementLabel>(5, A), {}), DimensionMismatch);
    CHECK_THROWS_AS(train_forest(d.x, d.y, {.n_trees = 4}), InvalidConfig);
    const auto forest = train_forest(d.x, d.y, {.n_trees = 3});
    CHECK_THROWS_AS(forest.predict(std::vector<double>{1.0}), DimensionMismatch);
    CHECK_THROWS_AS(DecisionTree({DecisionTree::Node{}}), InvalidConfig);
}

TEST_CASE("model files round-trip exactly") {
    crowdcons::testing::TempDir dir;
    const auto d = random_dataset(300, 6, 12);
    ForestModel model;
    model.forest = train_forest(d.x, d.y, {.n_trees = 7, .seed = 77});
    save_model(model, dir / "m.json");
    const auto loaded = load_model(dir / "m.json");
    CHECK(loaded == model);

    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> x(6);
        for (auto& v : x) v = 5.0 * rng.uniform();
        const auto a = model.predict(x), b = loaded.predict(x);
        CHECK(a.p_disagreement == b.p_disagreement);
        CHECK(a.label == b.label);
    }

    save_model(loaded, dir / "again.json");
    CHECK(crowdcons::testing::read_text(dir / "m.json") == crowdcons::testing::read_text(dir / "again.json"));
}

TEST_CASE("model files with vocabularies featurize questions") {
    crowdcons::testing::TempDir dir;
    const auto data = make_planted_corpus({.questions = 200, .seed = 5});
    ForestModel model;
    model.vocab = build_vocabularies(data.corpus);
    model.feature_mode = FeatureMode::Q;
    const auto x = extract_matrix(data.corpus, *model.vocab, data.images, FeatureMode::Q);
    std::vector<AgreementLabel> y;
    for (const auto& q : data.corpus.questions()) y.push_back(agreement_label(q, 10));
    model.forest = train_forest(x, y, {.seed = 5});
    save_model(model, dir / "m.json");
    const auto loaded = load_model(dir / "m.json");
    CHECK(loaded == model);
    for (const auto& q : data.corpus.questions()) {
        CHECK(loaded.predict(q, data.images).p_disagreement == model.predict(q, data.images).p_disagreement);
    }
}

TEST_CASE("model loading errors") {
    crowdcons::testing::TempDir dir;
    CHECK_THROWS_AS(load_model(""), IoError);
    CHECK_THROWS_AS(load_model(dir / "absent.json"), IoError);
    CHECK_THROWS_AS(save_model(ForestModel{}, ""), IoError);

    const auto d = separable(20, 4);
    ForestModel model;
    model.forest = train_forest(d.x, d.y, {.n_trees = 3});
    save_model(model, dir / "m.json");
    auto text = crowdcons::testing::read_text(dir / "m.json");

    crowdcons::testing::write_text(dir / "truncated.json", text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_model(dir / "truncated.json"), FormatVersionMismatch);
    crowdcons::testing::write_text(dir / "garbage.json", "\x01\x02 not a model");
    CHECK_THROWS_AS(load_model(dir / "garbage.json"), FormatVersionMismatch);

    const auto pos = text.find("\"version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 11, "\"version\":2");
    crowdcons::testing::write_text(dir / "v2.json", text);
    CHECK_THROWS_AS(load_model(dir / "v2.json"), FormatVersionMismatch);
}

TEST_CASE("planted signal: disagreement questions score higher on average") {
    const auto data = make_planted_corpus({.questions = 600, .seed = 21});
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < data.corpus.size(); ++i) (i % 4 == 0 ? test_idx : train_idx).push_back(i);
    const auto train = data.corpus.subset(train_idx);
    const auto test = data.corpus.subset(test_idx);
    const auto vocab = build_vocabularies(train);
    std::vector<AgreementLabel> y;
    for (const auto& q : train.questions()) y.push_back(agreement_label(q, 10));
    const auto forest = train_forest(extract_matrix(train, vocab, data.images, FeatureMode::QI), y, {.seed = 1});
    double sum_d = 0, sum_a = 0;
    std::size_t n_d = 0, n_a = 0;
    for (const auto& q : test.questions()) {
        const double p = forest.predict(extract_features(q, vocab, data.images, FeatureMode::QI)).p_disagreement;
        if (agreement_label(q, 10) == D) {
            sum_d += p;
            ++n_d;
        } else {
            sum_a += p;
            ++n_a;
        }
    }
    REQUIRE(n_d > 0);
    REQUIRE(n_a > 0);
    CHECK(sum_d / double(n_d) > sum_a / double(n_a));
}
