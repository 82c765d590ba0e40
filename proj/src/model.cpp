#include "invscope/ml/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "invscope/error.hpp"

namespace invscope::ml {

namespace {

json vec_json(const Eigen::VectorXd& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vec_from(const json& a, std::size_t expected, const char* what)
{
    if (!a.is_array() || a.size() != expected) {
        throw Error(ErrorCode::InvalidInput, std::string("model field ") + what + " has the wrong length");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(expected));
    for (std::size_t i = 0; i < expected; ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
    return v;
}

json tree_json(const DecisionTree& t)
{
    json nodes = json::array();
    for (const auto& n : t.nodes) {
        nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.probability}));
    }
    return nodes;
}

DecisionTree tree_from(const json& j, std::size_t dims)
{
    DecisionTree t;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.probability = n.at(4).get<double>();
        t.nodes.push_back(node);
    }
    const int count = static_cast<int>(t.nodes.size());
    if (count == 0) throw Error(ErrorCode::InvalidInput, "model tree has no nodes");
    for (int i = 0; i < count; ++i) {
        const auto& n = t.nodes[static_cast<std::size_t>(i)];
        if (n.feature < 0) continue;
        if (static_cast<std::size_t>(n.feature) >= dims || n.left <= i || n.right <= i || n.left >= count ||
            n.right >= count) {
            throw Error(ErrorCode::InvalidInput, "model tree node " + std::to_string(i) + " is malformed");
        }
    }
    return t;
}

std::string make_id(ModelKind kind, const LabeledDataset& data)
{
    return std::string(to_string(kind)) + "-v" + std::to_string(kModelVersion) + "-" + data.provenance.substr(0, 16);
}

}  // namespace

std::string_view to_string(ModelKind k)
{
    return k == ModelKind::LogisticRegression ? "logreg" : "forest";
}

Model::Model(LogRegModel params, const LabeledDataset& training_data)
    : params_(std::move(params)),
      feature_names_(training_data.feature_names),
      model_id_(make_id(ModelKind::LogisticRegression, training_data))
{
}

Model::Model(ForestModel params, const LabeledDataset& training_data)
    : params_(std::move(params)),
      feature_names_(training_data.feature_names),
      model_id_(make_id(ModelKind::RandomForest, training_data))
{
}

ModelKind Model::kind() const
{
    return std::holds_alternative<LogRegModel>(params_) ? ModelKind::LogisticRegression : ModelKind::RandomForest;
}

double Model::predict(const FeatureVector& x) const
{
    if (static_cast<std::size_t>(x.size()) != feature_names_.size()) {
        throw Error(ErrorCode::InvalidInput, "feature vector has " + std::to_string(x.size()) +
                                                 " entries, model expects " +
                                                 std::to_string(feature_names_.size()));
    }
    const double p = std::visit([&](const auto& m) { return m.predict(x); }, params_);
    if (!std::isfinite(p)) return 0.5;
    return std::clamp(p, 0.0, 1.0);
}

json Model::to_json() const
{
    json j{{"kind", to_string(kind())},
           {"model_id", model_id_},
           {"version", kModelVersion},
           {"feature_names", feature_names_},
           {"metrics", metrics_}};
    if (const auto* lr = std::get_if<LogRegModel>(&params_)) {
        j["standardization"] = {{"mean", vec_json(lr->standardizer.mean)},
                                {"scale", vec_json(lr->standardizer.scale)}};
        j["parameters"] = {{"weights", vec_json(lr->params.weights)}, {"bias", lr->params.bias}};
    } else {
        const auto& forest = std::get<ForestModel>(params_);
        json trees = json::array();
        for (const auto& t : forest.trees) trees.push_back(tree_json(t));
        j["parameters"] = {{"trees", trees}};
    }
    return j;
}

Model Model::from_json(const json& j)
{
    try {
        Model m;
        m.model_id_ = j.at("model_id").get<std::string>();
        m.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
        m.metrics_ = j.value("metrics", json::object());
        const std::size_t dims = m.feature_names_.size();
        const auto kind = j.at("kind").get<std::string>();
        const auto& params = j.at("parameters");
        if (kind == "logreg") {
            LogRegModel lr;
            lr.standardizer.mean = vec_from(j.at("standardization").at("mean"), dims, "mean");
            lr.standardizer.scale = vec_from(j.at("standardization").at("scale"), dims, "scale");
            lr.params.weights = vec_from(params.at("weights"), dims, "weights");
            lr.params.bias = params.at("bias").get<double>();
            m.params_ = std::move(lr);
        } else if (kind == "forest") {
            ForestModel forest;
            for (const auto& t : params.at("trees")) forest.trees.push_back(tree_from(t, dims));
            if (forest.trees.empty()) throw Error(ErrorCode::InvalidInput, "forest model has no trees");
            m.params_ = std::move(forest);
        } else {
            throw Error(ErrorCode::InvalidInput, "unknown model kind: " + kind);
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, std::string("malformed model file: ") + e.what());
    }
}

void Model::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidInput, "cannot write model file " + path.string());
    out << to_json().dump(2) << '\n';
    if (!out) throw Error(ErrorCode::InvalidInput, "failed writing model file " + path.string());
}

Model Model::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot read model file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, "model file is not JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

Metrics evaluate_model(const Model& model, const LabeledDataset& split)
{
    std::vector<double> scores(split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
        scores[i] = model.predict(split.features.row(static_cast<Eigen::Index>(i)).transpose());
    }
    return compute_metrics(scores, split.labels);
}

namespace {

template <typename Params>
TrainingRun finish_run(Params params, const DatasetSplit& split)
{
    Model model(std::move(params), split.train);
    TrainingRun run{std::move(model), {}, {}};
    run.validation = evaluate_model(run.model, split.validation);
    run.test = evaluate_model(run.model, split.test);
    run.model.set_metrics(json{{"train_rows", split.train.size()},
                               {"validation", to_json(run.validation)},
                               {"test", to_json(run.test)}});
    return run;
}

}  // namespace

TrainingRun train_logreg_run(const LabeledDataset& ds, std::uint64_t seed, LogRegConfig config)
{
    const auto split = split_dataset(ds, seed);
    config.seed = seed;
    return finish_run(train_logreg(split.train, config), split);
}

TrainingRun train_forest_run(const LabeledDataset& ds, std::uint64_t seed, ForestConfig config)
{
    const auto split = split_dataset(ds, seed);
    config.seed = seed;
    return finish_run(train_forest(split.train, config), split);
}

}  // namespace invscope::ml
