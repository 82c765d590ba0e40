#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "invscope/codec.hpp"

namespace invscope::ml {

struct ConfusionMatrix {
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t true_negative = 0;
    std::size_t false_negative = 0;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.5;
    ConfusionMatrix confusion;
};

inline constexpr double kDecisionThreshold = 0.5;

/// Area under the ROC curve from the Mann-Whitney rank statistic, ties at
/// midrank. 0.5 when only one class is present.
double auc_rank(std::span<const double> scores, const Eigen::VectorXd& labels);

/// Predicted positive iff score >= threshold. Precision and recall are 0
/// when their denominator is 0.
Metrics compute_metrics(std::span<const double> scores, const Eigen::VectorXd& labels,
                        double threshold = kDecisionThreshold);

json to_json(const Metrics& m);

}  // namespace invscope::ml
