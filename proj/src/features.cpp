#include "invscope/ml/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "invscope/error.hpp"
#include "invscope/id.hpp"

namespace invscope::ml {

namespace {

constexpr std::size_t kSeverityOffset = 0;
constexpr std::size_t kDetectorOffset = 4;
constexpr std::size_t kAssetOffset = kDetectorOffset + kHashBuckets;
constexpr std::size_t kScalarOffset = kAssetOffset + kHashBuckets;

std::string two_digits(std::size_t i) { return (i < 10 ? "0" : "") + std::to_string(i); }

}  // namespace

const std::vector<std::string>& feature_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n{"severity_info", "severity_low", "severity_medium", "severity_high"};
        for (std::size_t i = 0; i < kHashBuckets; ++i) n.push_back("detector_bucket_" + two_digits(i));
        for (std::size_t i = 0; i < kHashBuckets; ++i) n.push_back("asset_bucket_" + two_digits(i));
        for (const char* s : {"domain_flag", "event_count", "unique_source_count", "unique_asset_count", "span_seconds",
                              "mean_gap_seconds", "hour_of_day_sin", "hour_of_day_cos"}) {
            n.emplace_back(s);
        }
        return n;
    }();
    return names;
}

std::size_t hash_bucket(std::string_view text) { return fnv1a32(text) % kHashBuckets; }

FeatureVector extract_features(const Alert& alert, std::span<const Event> events)
{
    if (events.empty()) throw Error(ErrorCode::Precondition, "alert " + alert.id + " has no resolvable events");

    FeatureVector x = FeatureVector::Zero(kFeatureCount);
    x(kSeverityOffset + static_cast<std::size_t>(alert.severity)) = 1.0;
    x(kDetectorOffset + hash_bucket(alert.detector)) = 1.0;
    x(kAssetOffset + hash_bucket(alert.asset)) = 1.0;

    std::set<std::string_view> sources;
    std::set<std::string_view> assets;
    Timestamp first = events.front().occurred_at;
    Timestamp last = first;
    for (const Event& e : events) {
        sources.insert(e.source_id);
        assets.insert(e.asset);
        first = std::min(first, e.occurred_at);
        last = std::max(last, e.occurred_at);
    }
    const double n = static_cast<double>(events.size());
    const double span = static_cast<double>((last - first).count()) / 1000.0;
    const double angle = 2.0 * std::numbers::pi * alert.raised_at.hour_of_day() / 24.0;

    x(kScalarOffset + 0) = alert.domain == SensorDomain::Cyber ? 1.0 : 0.0;
    x(kScalarOffset + 1) = n;
    x(kScalarOffset + 2) = static_cast<double>(sources.size());
    x(kScalarOffset + 3) = static_cast<double>(assets.size());
    x(kScalarOffset + 4) = span;
    // Consecutive gaps of the sorted times sum to the span.
    x(kScalarOffset + 5) = events.size() > 1 ? span / (n - 1.0) : 0.0;
    x(kScalarOffset + 6) = std::sin(angle);
    x(kScalarOffset + 7) = std::cos(angle);
    return x;
}

}  // namespace invscope::ml
