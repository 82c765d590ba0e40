#include "invscope/ml/logreg.hpp"

#include <cmath>

#include "invscope/error.hpp"
#include "invscope/rng.hpp"

namespace invscope::ml {

namespace {

constexpr double kClamp = 1e6;

/// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

Standardizer Standardizer::fit(const Eigen::MatrixXd& x)
{
    Standardizer s;
    const auto n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean().transpose();
    s.scale = Eigen::VectorXd::Ones(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double var = n > 0 ? (x.col(c).array() - s.mean(c)).square().sum() / n : 0.0;
        const double sd = std::sqrt(var);
        if (sd > 0.0) {
            s.scale(c) = sd;
        } else {
            s.mean(c) = 0.0;
        }
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const
{
    Eigen::MatrixXd z = (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    return z.cwiseMax(-kClamp).cwiseMin(kClamp);
}

Eigen::VectorXd Standardizer::apply_row(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd z = (x - mean).array() / scale.array();
    return z.cwiseMax(-kClamp).cwiseMin(kClamp);
}

double sigmoid(double z)
{
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logistic_loss(const LogisticParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w, double l2)
{
    const Eigen::VectorXd z = (x * p.weights).array() + p.bias;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        // -y log s(z) - (1-y) log(1 - s(z)) = softplus(z) - y z
        total += w(i) * (softplus(z(i)) - y(i) * z(i));
    }
    return total / static_cast<double>(z.size()) + 0.5 * l2 * p.weights.squaredNorm();
}

LogisticParams logistic_gradient(const LogisticParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w, double l2)
{
    const Eigen::VectorXd z = (x * p.weights).array() + p.bias;
    Eigen::VectorXd residual(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) residual(i) = w(i) * (sigmoid(z(i)) - y(i));
    const double n = static_cast<double>(z.size());
    LogisticParams g;
    g.weights = x.transpose() * residual / n + l2 * p.weights;
    g.bias = residual.sum() / n;
    return g;
}

Eigen::VectorXd sample_weights(const Eigen::VectorXd& y, bool class_weighted)
{
    Eigen::VectorXd w = Eigen::VectorXd::Ones(y.size());
    if (!class_weighted) return w;
    const double n = static_cast<double>(y.size());
    const double pos = (y.array() > 0.5).cast<double>().sum();
    const double neg = n - pos;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double count = y(i) > 0.5 ? pos : neg;
        w(i) = count > 0 ? n / (2.0 * count) : 1.0;
    }
    return w;
}

double LogRegModel::predict(const FeatureVector& x) const
{
    const Eigen::VectorXd z = standardizer.apply_row(x);
    return sigmoid(z.dot(params.weights) + params.bias);
}

LogRegModel train_logreg(const LabeledDataset& train, const LogRegConfig& config)
{
    if (train.size() == 0) throw Error(ErrorCode::Precondition, "too few rows: empty training set");

    LogRegModel m;
    m.standardizer = Standardizer::fit(train.features);
    const Eigen::MatrixXd x = m.standardizer.apply(train.features);
    const Eigen::VectorXd w = sample_weights(train.labels, config.class_weighted);

    Rng rng(config.seed);
    m.params.weights.resize(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) m.params.weights(i) = rng.uniform(-0.01, 0.01);
    m.params.bias = 0.0;

    for (int epoch = 0; epoch <= config.epochs; ++epoch) {
        const double loss = logistic_loss(m.params, x, train.labels, w, config.l2);
        if (!std::isfinite(loss)) {
            throw Error(ErrorCode::Training, "non-finite training loss at epoch " + std::to_string(epoch) +
                                                 " (learning_rate=" + std::to_string(config.learning_rate) +
                                                 " is probably too high)");
        }
        m.loss_history.push_back(loss);
        if (epoch == config.epochs) break;
        const LogisticParams g = logistic_gradient(m.params, x, train.labels, w, config.l2);
        m.params.weights -= config.learning_rate * g.weights;
        m.params.bias -= config.learning_rate * g.bias;
    }
    return m;
}

}  // namespace invscope::ml
