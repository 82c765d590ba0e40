#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "invscope/codec.hpp"
#include "invscope/ml/forest.hpp"
#include "invscope/ml/logreg.hpp"
#include "invscope/ml/metrics.hpp"

namespace invscope::ml {

enum class ModelKind { LogisticRegression, RandomForest };

std::string_view to_string(ModelKind k);

/// A deployable model: parameters plus the feature layout it expects and an
/// id of the form `<kind>-v<version>-<training data hash>`.
class Model {
public:
    Model(LogRegModel params, const LabeledDataset& training_data);
    Model(ForestModel params, const LabeledDataset& training_data);

    ModelKind kind() const;
    const std::string& model_id() const { return model_id_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const json& metrics() const { return metrics_; }
    void set_metrics(json metrics) { metrics_ = std::move(metrics); }
    const std::variant<LogRegModel, ForestModel>& parameters() const { return params_; }

    /// Incident probability in [0, 1].
    double predict(const FeatureVector& x) const;

    json to_json() const;
    static Model from_json(const json& j);
    void save(const std::filesystem::path& path) const;
    static Model load(const std::filesystem::path& path);

private:
    Model() = default;

    std::variant<LogRegModel, ForestModel> params_;
    std::vector<std::string> feature_names_;
    std::string model_id_;
    json metrics_ = json::object();
};

inline constexpr int kModelVersion = 1;

/// Scores every row of `split` and computes metrics against its labels.
Metrics evaluate_model(const Model& model, const LabeledDataset& split);

struct TrainingRun {
    Model model;
    Metrics validation;
    Metrics test;
};

/// Split (70/15/15 with `seed`), train on the train split and evaluate on
/// validation and test. Metrics are stored in the model.
TrainingRun train_logreg_run(const LabeledDataset& ds, std::uint64_t seed, LogRegConfig config = {});
TrainingRun train_forest_run(const LabeledDataset& ds, std::uint64_t seed, ForestConfig config = {});

}  // namespace invscope::ml
