#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "invscope/ml/dataset.hpp"

namespace invscope::ml {

struct LogRegConfig {
    double learning_rate = 0.1;
    double l2 = 1e-3;
    int epochs = 500;
    std::uint64_t seed = 7;
    /// Weight each class by n / (2 * n_class).
    bool class_weighted = true;
};

/// Per-feature centering and scaling fitted on the training split. Columns
/// with zero spread pass through unchanged. Standardized values are clamped
/// to +-1e6.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd apply_row(const Eigen::VectorXd& x) const;
};

struct LogisticParams {
    Eigen::VectorXd weights;
    double bias = 0.0;
};

double sigmoid(double z);

/// Weighted mean log-loss plus (l2 / 2) * |w|^2 (bias unregularized).
double logistic_loss(const LogisticParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& sample_weights, double l2);

/// Analytic gradient of logistic_loss, in the same shape as the params.
LogisticParams logistic_gradient(const LogisticParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& sample_weights, double l2);

Eigen::VectorXd sample_weights(const Eigen::VectorXd& y, bool class_weighted);

struct LogRegModel {
    Standardizer standardizer;
    LogisticParams params;
    std::vector<double> loss_history;

    double predict(const FeatureVector& x) const;
};

/// Full-batch gradient descent. Throws Training when the loss becomes
/// non-finite.
LogRegModel train_logreg(const LabeledDataset& train, const LogRegConfig& config);

}  // namespace invscope::ml
