#include "crowdcons/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "crowdcons/error.hpp"
#include "crowdcons/random.hpp"
#include "io_util.hpp"

namespace crowdcons {

double gini_impurity(std::size_t disagreement, std::size_t agreement) {
    const std::size_t total = disagreement + agreement;
    if (total == 0) throw EmptyNode("gini impurity of an empty node");
    const double p = static_cast<double>(disagreement) / static_cast<double>(total);
    const double q = static_cast<double>(agreement) / static_cast<double>(total);
    return 1.0 - (p * p + q * q);
}

std::size_t ForestConfig::resolved_features_per_split(std::size_t dimension) const {
    if (n_trees == 0 || n_trees % 2 == 0) {
        throw InvalidConfig("tree count must be odd and positive, got " + std::to_string(n_trees));
    }
    if (min_leaf_size == 0) throw InvalidConfig("min_leaf_size must be >= 1");
    if (dimension == 0) throw DimensionMismatch("feature dimension is zero");
    const std::size_t mtry =
        features_per_split.value_or(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dimension)))));
    if (mtry < 1 || mtry > dimension) {
        throw InvalidConfig("features_per_split " + std::to_string(mtry) + " outside [1, " +
                            std::to_string(dimension) + "]");
    }
    return mtry;
}

DecisionTree::DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw InvalidConfig("tree has no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.is_leaf()) {
            if (n.votes_total == 0 || n.votes_disagreement > n.votes_total) {
                throw InvalidConfig("leaf " + std::to_string(i) + " has invalid vote counts");
            }
        } else if (n.left <= i || n.right <= i || n.left >= nodes_.size() || n.right >= nodes_.size()) {
            // Children always follow their parent, which also rules out cycles.
            throw InvalidConfig("node " + std::to_string(i) + " has invalid children");
        }
    }
}

const DecisionTree::Node& DecisionTree::leaf_for(std::span<const double> x) const noexcept {
    const Node* node = &nodes_.front();
    while (!node->is_leaf()) {
        node = &nodes_[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
    }
    return *node;
}

AgreementLabel DecisionTree::vote(std::span<const double> x) const noexcept {
    const Node& leaf = leaf_for(x);
    return 2 * leaf.votes_disagreement >= leaf.votes_total ? AgreementLabel::Disagreement
                                                           : AgreementLabel::Agreement;
}

std::size_t DecisionTree::depth() const noexcept {
    if (nodes_.empty()) return 0;
    std::vector<std::size_t> depth(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (!nodes_[i].is_leaf()) {
            depth[nodes_[i].left] = depth[i] + 1;
            depth[nodes_[i].right] = depth[i] + 1;
        }
    }
    return deepest;
}

Forest::Forest(std::vector<DecisionTree> trees, ForestConfig config, std::size_t input_dimension)
    : trees_(std::move(trees)), config_(std::move(config)), input_dimension_(input_dimension) {
    config_.resolved_features_per_split(input_dimension_);
    if (trees_.size() != config_.n_trees) {
        throw InvalidConfig("forest has " + std::to_string(trees_.size()) + " trees, config says " +
                            std::to_string(config_.n_trees));
    }
    for (const auto& tree : trees_) {
        for (const auto& node : tree.nodes()) {
            if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= input_dimension_) {
                throw InvalidConfig("split feature out of range");
            }
        }
    }
}

Prediction Forest::predict(std::span<const double> x) const {
    if (x.size() != input_dimension_) {
        throw DimensionMismatch("input has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(input_dimension_));
    }
    Prediction out;
    for (const auto& tree : trees_) {
        if (tree.vote(x) == AgreementLabel::Disagreement) ++out.disagreement_votes;
    }
    out.p_disagreement = static_cast<double>(out.disagreement_votes) / static_cast<double>(trees_.size());
    out.label = 2 * out.disagreement_votes > trees_.size() ? AgreementLabel::Disagreement
                                                           : AgreementLabel::Agreement;
    return out;
}

namespace {

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();  // weighted child impurity
    bool found = false;
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const AgreementLabel> y, const ForestConfig& config,
                std::size_t mtry, std::uint64_t seed)
        : x_(x), y_(y), config_(config), mtry_(mtry), rng_(seed), feature_order_(x.cols()) {
        for (std::size_t f = 0; f < feature_order_.size(); ++f) feature_order_[f] = static_cast<std::uint32_t>(f);
    }

    DecisionTree build() {
        const std::size_t n = x_.rows();
        rows_.resize(n);
        for (auto& r : rows_) r = static_cast<std::uint32_t>(rng_.below(n));

        struct Pending {
            std::uint32_t node;
            std::size_t begin, end, depth;
        };
        nodes_.emplace_back();
        std::vector<Pending> stack{{0, 0, n, 0}};
        while (!stack.empty()) {
            const Pending item = stack.back();
            stack.pop_back();
            const auto split = grow(item.node, item.begin, item.end, item.depth);
            if (!split) continue;
            // Push right first so the left subtree is expanded first.
            stack.push_back({nodes_[item.node].right, split->second, item.end, item.depth + 1});
            stack.push_back({nodes_[item.node].left, item.begin, split->second, item.depth + 1});
        }
        return DecisionTree(std::move(nodes_));
    }

private:
    // Turns nodes_[id] into a leaf or a split; on a split returns the
    // partition point of rows_[begin, end).
    std::optional<std::pair<std::size_t, std::size_t>> grow(std::uint32_t id, std::size_t begin,
                                                            std::size_t end, std::size_t depth) {
        std::size_t dis = 0;
        for (std::size_t i = begin; i < end; ++i) dis += y_[rows_[i]] == AgreementLabel::Disagreement;
        const std::size_t total = end - begin;

        auto make_leaf = [&] {
            auto& node = nodes_[id];
            node.feature = -1;
            node.votes_disagreement = static_cast<std::uint32_t>(dis);
            node.votes_total = static_cast<std::uint32_t>(total);
            return std::nullopt;
        };
        if (dis == 0 || dis == total) return make_leaf();
        if (total < 2 * config_.min_leaf_size) return make_leaf();
        if (config_.max_depth && depth >= *config_.max_depth) return make_leaf();

        const Split best = find_split(begin, end, dis);
        if (!best.found) return make_leaf();

        const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                               rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                               [&](std::uint32_t r) { return x_(r, best.feature) <= best.threshold; });
        const auto split_at = static_cast<std::size_t>(mid - rows_.begin());

        const auto left = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        const auto right = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        auto& node = nodes_[id];
        node.feature = static_cast<std::int32_t>(best.feature);
        node.threshold = best.threshold;
        node.left = left;
        node.right = right;
        return std::pair{begin, split_at};
    }

    // Examines mtry features drawn without replacement. If none of them admits
    // a valid split, keeps drawing until one does or all features are used.
    Split find_split(std::size_t begin, std::size_t end, std::size_t dis_total) {
        Split best;
        const std::size_t d = feature_order_.size();
        for (std::size_t k = 0; k < d; ++k) {
            if (k >= mtry_ && best.found) break;
            const std::size_t j = k + static_cast<std::size_t>(rng_.below(d - k));
            std::swap(feature_order_[k], feature_order_[j]);
            evaluate_feature(feature_order_[k], begin, end, dis_total, best);
        }
        return best;
    }

    void evaluate_feature(std::size_t feature, std::size_t begin, std::size_t end, std::size_t dis_total,
                          Split& best) {
        values_.clear();
        for (std::size_t i = begin; i < end; ++i) {
            values_.emplace_back(x_(rows_[i], feature), y_[rows_[i]] == AgreementLabel::Disagreement);
        }
        std::sort(values_.begin(), values_.end());
        const std::size_t n = values_.size();
        if (values_.front().first == values_.back().first) return;

        const double total = static_cast<double>(n);
        std::size_t left_dis = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_dis += values_[i].second;
            const double lo = values_[i].first;
            const double hi = values_[i + 1].first;
            if (lo == hi) continue;
            const std::size_t nl = i + 1;
            const std::size_t nr = n - nl;
            if (nl < config_.min_leaf_size || nr < config_.min_leaf_size) continue;
            const std::size_t right_dis = dis_total - left_dis;
            const double score = (static_cast<double>(nl) * gini_impurity(left_dis, nl - left_dis) +
                                  static_cast<double>(nr) * gini_impurity(right_dis, nr - right_dis)) /
                                 total;
            if (score < best.score) {
                double threshold = lo + (hi - lo) / 2.0;
                if (!(threshold >= lo && threshold < hi)) threshold = lo;
                best = {feature, threshold, score, true};
            }
        }
    }

    const FeatureMatrix& x_;
    std::span<const AgreementLabel> y_;
    const ForestConfig& config_;
    std::size_t mtry_;
    Rng rng_;
    std::vector<std::uint32_t> feature_order_;
    std::vector<std::uint32_t> rows_;
    std::vector<DecisionTree::Node> nodes_;
    std::vector<std::pair<double, bool>> values_;
};

}  // namespace

Forest train_forest(const FeatureMatrix& x, std::span<const AgreementLabel> y, const ForestConfig& config) {
    if (x.rows() == 0 || y.empty()) throw EmptyTrainingSet("no training examples");
    if (x.rows() != y.size()) {
        throw DimensionMismatch("feature rows (" + std::to_string(x.rows()) + ") and labels (" +
                                std::to_string(y.size()) + ") differ");
    }
    if (x.rows() < 2) throw EmptyTrainingSet("need at least two training examples");
    if (x.rows() > std::numeric_limits<std::uint32_t>::max()) throw InvalidConfig("too many training rows");
    const std::size_t mtry = config.resolved_features_per_split(x.cols());

    std::vector<DecisionTree> trees(config.n_trees);
    const std::size_t workers = std::min<std::size_t>(
        config.n_trees, config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads);

    auto build_tree = [&](std::size_t t) {
        trees[t] = TreeBuilder(x, y, config, mtry, derive_seed(config.seed, t)).build();
    };
    if (workers <= 1) {
        for (std::size_t t = 0; t < config.n_trees; ++t) build_tree(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t t = next++; t < config.n_trees; t = next++) {
                        try {
                            build_tree(t);
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) failure = std::current_exception();
                        }
                    }
                });
            }
        }
        if (failure) std::rethrow_exception(failure);
    }
    ForestConfig stored = config;
    stored.features_per_split = config.resolved_features_per_split(x.cols());
    return Forest(std::move(trees), stored, x.cols());
}

Prediction ForestModel::predict(const VisualQuestion& q, const ImageFeatureTable& images) const {
    if (!vocab) throw InvalidConfig("model has no vocabularies; featurize inputs explicitly");
    return forest.predict(extract_features(q, *vocab, images, feature_mode, layout));
}

namespace {

constexpr const char* kFormatName = "crowdcons-forest";

nlohmann::json tree_to_json(const DecisionTree& tree) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   dis = nlohmann::json::array(), total = nlohmann::json::array();
    for (const auto& n : tree.nodes()) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        dis.push_back(n.votes_disagreement);
        total.push_back(n.votes_total);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left},
            {"right", right},     {"votes_disagreement", dis}, {"votes_total", total}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
    const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<std::uint32_t>>();
    const auto right = j.at("right").get<std::vector<std::uint32_t>>();
    const auto dis = j.at("votes_disagreement").get<std::vector<std::uint32_t>>();
    const auto total = j.at("votes_total").get<std::vector<std::uint32_t>>();
    const std::size_t n = feature.size();
    if (threshold.size() != n || left.size() != n || right.size() != n || dis.size() != n || total.size() != n) {
        throw FormatVersionMismatch("tree arrays have inconsistent lengths");
    }
    std::vector<DecisionTree::Node> nodes(n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = {feature[i], threshold[i], left[i], right[i], dis[i], total[i]};
    return DecisionTree(std::move(nodes));
}

}  // namespace

void save_model(const ForestModel& model, const std::filesystem::path& path) {
    if (path.empty()) throw IoError("model path is empty");
    const auto& cfg = model.forest.config();
    nlohmann::json config = {{"n_trees", cfg.n_trees},
                             {"features_per_split", cfg.resolved_features_per_split(model.forest.input_dimension())},
                             {"min_leaf_size", cfg.min_leaf_size},
                             {"max_depth", cfg.max_depth ? nlohmann::json(*cfg.max_depth) : nlohmann::json(nullptr)},
                             {"seed", cfg.seed}};
    nlohmann::json doc = {{"format", kFormatName},
                          {"version", kModelFormatVersion},
                          {"config", config},
                          {"feature_mode", to_string(model.feature_mode)},
                          {"layout", to_string(model.layout)},
                          {"input_dimension", model.forest.input_dimension()}};
    if (model.vocab) {
        doc["vocab"] = {{"first", model.vocab->first()},
                        {"second", model.vocab->second()},
                        {"built_from", model.vocab->built_from()}};
    } else {
        doc["vocab"] = nullptr;
    }
    auto trees = nlohmann::json::array();
    for (const auto& tree : model.forest.trees()) trees.push_back(tree_to_json(tree));
    doc["trees"] = std::move(trees);

    auto out = detail::open_output(path);
    out << doc.dump() << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

ForestModel load_model(const std::filesystem::path& path) {
    const auto text = detail::read_file(path);
    try {
        const auto doc = nlohmann::json::parse(text);
        if (!doc.is_object() || doc.value("format", std::string()) != kFormatName) {
            throw FormatVersionMismatch(path.string() + ": not a forest model file");
        }
        if (doc.at("version").get<int>() != kModelFormatVersion) {
            throw FormatVersionMismatch(path.string() + ": unsupported model version " +
                                        doc.at("version").dump());
        }
        const auto& c = doc.at("config");
        ForestConfig config;
        config.n_trees = c.at("n_trees").get<std::size_t>();
        config.features_per_split = c.at("features_per_split").get<std::size_t>();
        config.min_leaf_size = c.at("min_leaf_size").get<std::size_t>();
        if (!c.at("max_depth").is_null()) config.max_depth = c.at("max_depth").get<std::size_t>();
        config.seed = c.at("seed").get<std::uint64_t>();

        ForestModel model;
        const auto mode = parse_feature_mode(doc.at("feature_mode").get<std::string>());
        const auto layout = parse_feature_layout(doc.at("layout").get<std::string>());
        if (!mode || !layout) throw FormatVersionMismatch(path.string() + ": bad feature mode or layout");
        model.feature_mode = *mode;
        model.layout = *layout;
        const auto& v = doc.at("vocab");
        if (!v.is_null()) {
            model.vocab = Vocabularies(v.at("first").get<std::vector<std::string>>(),
                                       v.at("second").get<std::vector<std::string>>(),
                                       v.at("built_from").get<std::string>());
        }
        std::vector<DecisionTree> trees;
        for (const auto& t : doc.at("trees")) trees.push_back(tree_from_json(t));
        const auto dim = doc.at("input_dimension").get<std::size_t>();
        if (model.vocab && feature_dimension(*model.vocab, model.feature_mode, model.layout) != dim) {
            throw FormatVersionMismatch(path.string() + ": input dimension does not match vocabularies");
        }
        model.forest = Forest(std::move(trees), config, dim);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatVersionMismatch(path.string() + ": malformed model: " + e.what());
    } catch (const InvalidConfig& e) {
        throw FormatVersionMismatch(path.string() + ": " + e.what());
    } catch (const ParseError& e) {
        throw FormatVersionMismatch(path.string() + ": " + e.what());
    }
}

}  // namespace crowdcons
