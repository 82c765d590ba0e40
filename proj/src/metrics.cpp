#include "invscope/ml/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "invscope/error.hpp"

namespace invscope::ml {

double auc_rank(std::span<const double> scores, const Eigen::VectorXd& labels)
{
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }

    double pos = 0.0;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels(static_cast<Eigen::Index>(i)) > 0.5) {
            pos += 1.0;
            rank_sum += rank[i];
        }
    }
    const double neg = static_cast<double>(n) - pos;
    if (pos == 0.0 || neg == 0.0) return 0.5;
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

Metrics compute_metrics(std::span<const double> scores, const Eigen::VectorXd& labels, double threshold)
{
    if (scores.empty()) throw Error(ErrorCode::Precondition, "cannot evaluate on an empty split");
    if (static_cast<Eigen::Index>(scores.size()) != labels.size()) {
        throw Error(ErrorCode::InvalidInput, "scores and labels differ in length");
    }
    Metrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        const bool actual = labels(static_cast<Eigen::Index>(i)) > 0.5;
        if (predicted && actual) ++m.confusion.true_positive;
        else if (predicted) ++m.confusion.false_positive;
        else if (actual) ++m.confusion.false_negative;
        else ++m.confusion.true_negative;
    }
    const auto& c = m.confusion;
    const double tp = static_cast<double>(c.true_positive);
    m.accuracy = static_cast<double>(c.true_positive + c.true_negative) / static_cast<double>(scores.size());
    m.precision = c.true_positive + c.false_positive ? tp / static_cast<double>(c.true_positive + c.false_positive) : 0.0;
    m.recall = c.true_positive + c.false_negative ? tp / static_cast<double>(c.true_positive + c.false_negative) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.auc = auc_rank(scores, labels);
    return m;
}

json to_json(const Metrics& m)
{
    return json{{"accuracy", m.accuracy},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"auc", m.auc},
                {"confusion_matrix",
                 {{"tp", m.confusion.true_positive},
                  {"fp", m.confusion.false_positive},
                  {"tn", m.confusion.true_negative},
                  {"fn", m.confusion.false_negative}}}};
}

}  // namespace invscope::ml
