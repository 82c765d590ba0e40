#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invscope/ml/features.hpp"

namespace invscope::store {
class Store;
}

namespace invscope::ml {

/// Tabular training data: one row per classified alert.
struct LabeledDataset {
    std::vector<std::string> alert_ids;
    Eigen::MatrixXd features;  // rows x kFeatureCount
    Eigen::VectorXd labels;    // 1 = confirmed incident, 0 = irrelevant
    std::vector<std::string> feature_names = ml::feature_names();
    /// Content hash of ids, features and labels (hex).
    std::string provenance;

    std::size_t size() const { return alert_ids.size(); }
    std::size_t positives() const;

    LabeledDataset subset(std::span<const std::size_t> rows) const;
    void refresh_provenance();
};

/// Classified alerts only; unclassified alerts are left out. Alerts whose
/// events cannot be resolved are skipped and listed in `skipped`.
LabeledDataset build_dataset(const store::Store& store, std::vector<std::string>* skipped = nullptr);

struct DatasetSplit {
    LabeledDataset train;
    LabeledDataset validation;
    LabeledDataset test;
};

/// 70/15/15, stratified by label, deterministic under `seed`. Per label the
/// floor of each share is taken and leftover rows go to the largest
/// fractional remainders (ties: train, validation, test). Throws
/// Precondition for fewer than 10 rows or a single class.
DatasetSplit split_dataset(const LabeledDataset& ds, std::uint64_t seed);

/// Row counts per split for `n` rows of one label.
std::array<std::size_t, 3> stratum_counts(std::size_t n);

void write_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset read_dataset(const std::filesystem::path& path);

}  // namespace invscope::ml
