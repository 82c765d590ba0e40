#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "invscope/ml/dataset.hpp"

namespace invscope::ml {

struct ForestConfig {
    int n_trees = 100;
    /// nullopt grows trees until leaves are pure.
    std::optional<int> max_depth = 12;
    int min_leaf = 1;
    /// Features sampled per split; 0 means round(sqrt(feature count)).
    int features_per_split = 0;
    std::uint64_t seed = 7;
    /// Bootstrap draws each class with equal probability, so leaf
    /// probabilities are not pulled towards the majority class.
    bool class_weighted = true;
};

/// Flat node array; `feature < 0` marks a leaf. Rows with
/// x[feature] <= threshold go left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    /// Fraction of positive training rows reaching this node.
    double probability = 0.0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double predict(const FeatureVector& x) const;
    std::size_t depth() const;
};

struct ForestModel {
    std::vector<DecisionTree> trees;

    /// Mean leaf probability across trees.
    double predict(const FeatureVector& x) const;
};

/// Gini impurity 1 - p^2 - (1-p)^2 of a node with the given label counts.
double gini(std::size_t positives, std::size_t total);

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    /// Size-weighted mean of the child impurities.
    double impurity = 0.0;
    double left_impurity = 0.0;
    double right_impurity = 0.0;
    std::size_t left_count = 0;
    std::size_t right_count = 0;
};

/// Best threshold split over `features`, with thresholds at midpoints
/// between consecutive distinct values and at least `min_leaf` rows per
/// side. Ties keep the first candidate (feature order, then threshold).
std::optional<SplitCandidate> best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                         std::span<const std::size_t> rows, std::span<const int> features,
                                         int min_leaf);

/// Bagged CART trees. With a single tree no bootstrap is drawn. Throws
/// InvalidInput when n_trees < 1, max_depth < 1 or min_leaf < 1.
ForestModel train_forest(const LabeledDataset& train, const ForestConfig& config);

}  // namespace invscope::ml
