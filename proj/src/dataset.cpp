#include "invscope/ml/dataset.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "invscope/codec.hpp"
#include "invscope/error.hpp"
#include "invscope/id.hpp"
#include "invscope/rng.hpp"
#include "invscope/store.hpp"

namespace invscope::ml {

namespace {

constexpr std::array<double, 3> kShares{0.70, 0.15, 0.15};
constexpr std::size_t kMinRows = 10;

}  // namespace

std::size_t LabeledDataset::positives() const
{
    return static_cast<std::size_t>((labels.array() > 0.5).count());
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const
{
    LabeledDataset out;
    out.feature_names = feature_names;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(rows[i]);
        out.alert_ids.push_back(alert_ids[rows[i]]);
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
        out.labels(static_cast<Eigen::Index>(i)) = labels(r);
    }
    out.refresh_provenance();
    return out;
}

void LabeledDataset::refresh_provenance()
{
    std::uint64_t h = fnv1a64("dataset");
    for (std::size_t i = 0; i < alert_ids.size(); ++i) {
        h = fnv1a64(alert_ids[i], h);
        const auto row = static_cast<Eigen::Index>(i);
        for (Eigen::Index c = 0; c < features.cols(); ++c) {
            const double v = features(row, c);
            h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&v), sizeof v), h);
        }
        h = fnv1a64(labels(row) > 0.5 ? "1" : "0", h);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    provenance = buf;
}

LabeledDataset build_dataset(const store::Store& store, std::vector<std::string>* skipped)
{
    std::vector<std::string> ids;
    std::vector<FeatureVector> rows;
    std::vector<double> labels;
    for (const Alert& alert : store.alerts()) {
        const auto incident = store.incident_for(alert.id);
        if (!incident) continue;
        std::vector<Event> events;
        bool complete = true;
        for (const auto& eid : alert.event_ids) {
            if (auto e = store.find_event(eid)) events.push_back(std::move(*e));
            else complete = false;
        }
        if (!complete || events.empty()) {
            if (skipped) skipped->push_back(alert.id);
            continue;
        }
        ids.push_back(alert.id);
        rows.push_back(extract_features(alert, events));
        labels.push_back(incident->classification == Classification::Confirmed ? 1.0 : 0.0);
    }

    LabeledDataset ds;
    ds.alert_ids = std::move(ids);
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kFeatureCount));
    ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ds.features.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        ds.labels(static_cast<Eigen::Index>(i)) = labels[i];
    }
    ds.refresh_provenance();
    return ds;
}

std::array<std::size_t, 3> stratum_counts(std::size_t n)
{
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        const double exact = static_cast<double>(n) * kShares[s];
        // Guard against 0.7 * n landing a hair under an integer.
        const double fl = std::floor(exact + 1e-9);
        counts[s] = static_cast<std::size_t>(fl);
        remainder[s] = std::max(0.0, exact - fl);
        assigned += counts[s];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
    return counts;
}

DatasetSplit split_dataset(const LabeledDataset& ds, std::uint64_t seed)
{
    if (ds.size() < kMinRows) {
        throw Error(ErrorCode::Precondition,
                    "too few rows: " + std::to_string(ds.size()) + " labeled alerts, need at least " +
                        std::to_string(kMinRows));
    }
    const std::size_t pos = ds.positives();
    if (pos == 0 || pos == ds.size()) throw Error(ErrorCode::Precondition, "single-class dataset");

    Rng rng(seed);
    std::array<std::vector<std::size_t>, 3> parts;
    for (const double label : {0.0, 1.0}) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if ((ds.labels(static_cast<Eigen::Index>(i)) > 0.5) == (label > 0.5)) rows.push_back(i);
        }
        rng.shuffle(rows);
        const auto counts = stratum_counts(rows.size());
        std::size_t at = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            parts[s].insert(parts[s].end(), rows.begin() + static_cast<std::ptrdiff_t>(at),
                            rows.begin() + static_cast<std::ptrdiff_t>(at + counts[s]));
            at += counts[s];
        }
    }
    for (auto& p : parts) std::sort(p.begin(), p.end());
    return {ds.subset(parts[0]), ds.subset(parts[1]), ds.subset(parts[2])};
}

void write_dataset(const LabeledDataset& ds, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        json features = json::array();
        for (Eigen::Index c = 0; c < ds.features.cols(); ++c) features.push_back(ds.features(r, c));
        out << json{{"alert_id", ds.alert_ids[i]}, {"features", features}, {"label", ds.labels(r) > 0.5 ? 1 : 0}}.dump()
            << '\n';
    }
}

LabeledDataset read_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot read " + path.string());
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            auto f = j.at("features").get<std::vector<double>>();
            if (f.size() != kFeatureCount) throw Error(ErrorCode::InvalidInput, "wrong feature count");
            ids.push_back(j.at("alert_id").get<std::string>());
            rows.push_back(std::move(f));
            labels.push_back(j.at("label").get<int>() ? 1.0 : 0.0);
        } catch (const std::exception& e) {
            throw Error(ErrorCode::InvalidInput, path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    LabeledDataset ds;
    ds.alert_ids = std::move(ids);
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kFeatureCount));
    ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        }
        ds.labels(static_cast<Eigen::Index>(i)) = labels[i];
    }
    ds.refresh_provenance();
    return ds;
}

}  // namespace invscope::ml
