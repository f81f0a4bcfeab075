#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "crowdcons/answers.hpp"
#include "crowdcons/features.hpp"

namespace crowdcons {

/// 1 - sum of squared class proportions. Throws EmptyNode when both counts are zero.
double gini_impurity(std::size_t disagreement, std::size_t agreement);

struct ForestConfig {
    std::size_t n_trees = 25;
    /// Defaults to ceil(sqrt(d)).
    std::optional<std::size_t> features_per_split;
    std::size_t min_leaf_size = 1;
    /// Unlimited when unset.
    std::optional<std::size_t> max_depth;
    std::uint64_t seed = 0;
    /// Worker threads for training; 0 means hardware concurrency. Does not
    /// affect the trained model.
    std::size_t threads = 1;

    /// Throws InvalidConfig for an even or zero tree count, a zero leaf size,
    /// or a features_per_split outside [1, d].
    std::size_t resolved_features_per_split(std::size_t dimension) const;

    bool operator==(const ForestConfig& other) const {
        return n_trees == other.n_trees && features_per_split == other.features_per_split &&
               min_leaf_size == other.min_leaf_size && max_depth == other.max_depth && seed == other.seed;
    }
};

class DecisionTree {
public:
    struct Node {
        // Internal nodes: feature >= 0, go left when x[feature] <= threshold.
        // Leaves: feature == -1 and the vote counts of the bootstrap rows that reached them.
        std::int32_t feature = -1;
        double threshold = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        std::uint32_t votes_disagreement = 0;
        std::uint32_t votes_total = 0;

        bool is_leaf() const noexcept { return feature < 0; }
        bool operator==(const Node&) const = default;
    };

    DecisionTree() = default;
    /// Validates the node graph (children in range, positive leaf counts).
    explicit DecisionTree(std::vector<Node> nodes);

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& leaf_for(std::span<const double> x) const noexcept;
    /// Leaf majority; ties vote Disagreement.
    AgreementLabel vote(std::span<const double> x) const noexcept;
    std::size_t depth() const noexcept;

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<Node> nodes_;
};

struct Prediction {
    AgreementLabel label = AgreementLabel::Agreement;
    double p_disagreement = 0.0;
    std::size_t disagreement_votes = 0;
};

/// Bagged ensemble of CART trees over a fixed input dimension.
class Forest {
public:
    Forest() = default;
    Forest(std::vector<DecisionTree> trees, ForestConfig config, std::size_t input_dimension);

    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
    const ForestConfig& config() const noexcept { return config_; }
    std::size_t input_dimension() const noexcept { return input_dimension_; }

    /// Throws DimensionMismatch.
    Prediction predict(std::span<const double> x) const;

    bool operator==(const Forest&) const = default;

private:
    std::vector<DecisionTree> trees_;
    ForestConfig config_;
    std::size_t input_dimension_ = 0;
};

/// Each tree sees a bootstrap sample of size n and greedy Gini splits over
/// features_per_split random features, thresholds at midpoints between
/// consecutive distinct values. Tree t draws from a stream derived from
/// (config.seed, t), so the result does not depend on config.threads.
Forest train_forest(const FeatureMatrix& x, std::span<const AgreementLabel> y, const ForestConfig& config);

/// A trained forest plus what is needed to featurize new questions.
struct ForestModel {
    Forest forest;
    std::optional<Vocabularies> vocab;
    FeatureMode feature_mode = FeatureMode::QI;
    FeatureLayout layout = FeatureLayout::Truncated;

    Prediction predict(std::span<const double> x) const { return forest.predict(x); }
    /// Featurizes with the embedded vocabularies. Throws InvalidConfig without them.
    Prediction predict(const VisualQuestion& q, const ImageFeatureTable& images) const;

    bool operator==(const ForestModel&) const = default;
};

inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON. Throws IoError on unwritable/unreadable paths.
void save_model(const ForestModel& model, const std::filesystem::path& path);
/// Throws IoError, or FormatVersionMismatch for anything that is not a
/// well-formed model document of the current version.
ForestModel load_model(const std::filesystem::path& path);

}  // namespace crowdcons
