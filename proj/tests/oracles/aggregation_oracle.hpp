#pragma once

#include <vector>

#include "invscope/store.hpp"
#include "random_data.hpp"

namespace invscope::testing {

/// Full-scan versions of the store aggregations, computed from the raw
/// records a store was fed. Duplicate writes are resolved the way the
/// store documents: first write wins; the current score is the newest
/// scored_at, ties going to the smallest model id.
class AggregationOracle {
public:
    explicit AggregationOracle(const StoreFixture& f);

    store::TimeHistogram time_histogram(const store::AlertFilter& f, Timestamp now) const;
    store::SeverityCounts severity_counts(const store::AlertFilter& f) const;
    store::DomainCounts domain_counts(const store::AlertFilter& f) const;
    store::ProbabilityHistogram probability_histogram(const store::AlertFilter& f) const;
    /// The time range of `f` is ignored; the window decides.
    store::Gauge gauge(Millis window, std::uint64_t threshold, Timestamp now, store::AlertFilter f = {}) const;
    std::vector<std::string> list_ids(const store::AlertFilter& f, store::SortKey sort) const;

private:
    bool matches(const Alert& a, const store::AlertFilter& f) const;
    std::optional<double> probability(const std::string& alert_id) const;
    std::optional<Classification> classification(const std::string& alert_id) const;

    std::vector<Alert> alerts_;
    std::vector<Incident> incidents_;
    std::vector<MlScore> scores_;
};

}  // namespace invscope::testing
