#include "invscope/ml/forest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "invscope/error.hpp"
#include "invscope/rng.hpp"

namespace invscope::ml {

double gini(std::size_t positives, std::size_t total)
{
    if (total == 0) return 0.0;
    const double p = static_cast<double>(positives) / static_cast<double>(total);
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

std::optional<SplitCandidate> best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                         std::span<const std::size_t> rows, std::span<const int> features,
                                         int min_leaf)
{
    const std::size_t n = rows.size();
    const auto leaf_min = static_cast<std::size_t>(std::max(min_leaf, 1));
    if (n < 2 * leaf_min) return std::nullopt;

    std::size_t total_pos = 0;
    for (std::size_t r : rows) total_pos += y(static_cast<Eigen::Index>(r)) > 0.5;

    std::optional<SplitCandidate> best;
    std::vector<std::pair<double, bool>> column(n);
    for (int f : features) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(rows[i]);
            column[i] = {x(r, f), y(r) > 0.5};
        }
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::size_t left_pos = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_pos += column[i].second;
            const double lo = column[i].first;
            const double hi = column[i + 1].first;
            if (lo == hi) continue;
            const std::size_t left_n = i + 1;
            const std::size_t right_n = n - left_n;
            if (left_n < leaf_min || right_n < leaf_min) continue;

            const double gl = gini(left_pos, left_n);
            const double gr = gini(total_pos - left_pos, right_n);
            const double weighted = (static_cast<double>(left_n) * gl + static_cast<double>(right_n) * gr) /
                                    static_cast<double>(n);
            if (best && weighted >= best->impurity) continue;

            double threshold = lo + (hi - lo) / 2.0;
            if (threshold >= hi) threshold = lo;
            best = SplitCandidate{f, threshold, weighted, gl, gr, left_n, right_n};
        }
    }
    return best;
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestConfig& config, Rng& rng)
        : x_(x), y_(y), config_(config), rng_(rng)
    {
        const auto d = static_cast<int>(x.cols());
        per_split_ = config.features_per_split > 0
                         ? std::min(config.features_per_split, d)
                         : std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(d)))));
    }

    DecisionTree build(std::vector<std::size_t> rows)
    {
        DecisionTree tree;
        grow(tree, rows, 0);
        return tree;
    }

private:
    int grow(DecisionTree& tree, const std::vector<std::size_t>& rows, int depth)
    {
        const int index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        std::size_t pos = 0;
        for (std::size_t r : rows) pos += y_(static_cast<Eigen::Index>(r)) > 0.5;
        tree.nodes[static_cast<std::size_t>(index)].probability =
            rows.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(rows.size());

        const bool pure = pos == 0 || pos == rows.size();
        const bool depth_reached = config_.max_depth && depth >= *config_.max_depth;
        if (pure || depth_reached) return index;

        const auto split = choose_split(rows);
        if (!split) return index;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t r : rows) {
            (x_(static_cast<Eigen::Index>(r), split->feature) <= split->threshold ? left : right).push_back(r);
        }
        const int l = grow(tree, left, depth + 1);
        const int r = grow(tree, right, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.left = l;
        node.right = r;
        return index;
    }

    /// Samples `per_split_` features; falls back to the remaining ones in
    /// random order when none of the sample can split the node.
    std::optional<SplitCandidate> choose_split(const std::vector<std::size_t>& rows)
    {
        std::vector<int> order(static_cast<std::size_t>(x_.cols()));
        std::iota(order.begin(), order.end(), 0);
        rng_.shuffle(order);
        const auto k = static_cast<std::size_t>(per_split_);
        const std::span<const int> sampled(order.data(), k);
        if (auto s = best_split(x_, y_, rows, sampled, config_.min_leaf)) return s;
        for (std::size_t i = k; i < order.size(); ++i) {
            const std::span<const int> one(&order[i], 1);
            if (auto s = best_split(x_, y_, rows, one, config_.min_leaf)) return s;
        }
        return std::nullopt;
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    const ForestConfig& config_;
    Rng& rng_;
    int per_split_ = 1;
};

}  // namespace

double DecisionTree::predict(const FeatureVector& x) const
{
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        i = static_cast<std::size_t>(x(nodes[i].feature) <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
    }
    return nodes[i].probability;
}

std::size_t DecisionTree::depth() const
{
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (nodes[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return deepest;
}

double ForestModel::predict(const FeatureVector& x) const
{
    if (trees.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return std::clamp(sum / static_cast<double>(trees.size()), 0.0, 1.0);
}

ForestModel train_forest(const LabeledDataset& train, const ForestConfig& config)
{
    if (config.n_trees < 1) throw Error(ErrorCode::InvalidInput, "n_trees must be >= 1");
    if (config.max_depth && *config.max_depth < 1) throw Error(ErrorCode::InvalidInput, "max_depth must be >= 1");
    if (config.min_leaf < 1) throw Error(ErrorCode::InvalidInput, "min_leaf must be >= 1");
    if (train.size() == 0) throw Error(ErrorCode::Precondition, "too few rows: empty training set");

    Rng rng(config.seed);
    TreeBuilder builder(train.features, train.labels, config, rng);
    ForestModel forest;
    const std::size_t n = train.size();
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t r = 0; r < n; ++r) by_class[train.labels(static_cast<Eigen::Index>(r)) > 0.5].push_back(r);
    const bool balanced = config.class_weighted && !by_class[0].empty() && !by_class[1].empty();
    for (int t = 0; t < config.n_trees; ++t) {
        std::vector<std::size_t> rows(n);
        if (config.n_trees == 1) {
            std::iota(rows.begin(), rows.end(), 0);
        } else if (balanced) {
            for (auto& r : rows) {
                const auto& pool = by_class[rng.index(2)];
                r = pool[rng.index(pool.size())];
            }
        } else {
            for (auto& r : rows) r = static_cast<std::size_t>(rng.index(n));
        }
        forest.trees.push_back(builder.build(std::move(rows)));
    }
    return forest;
}

}  // namespace invscope::ml
