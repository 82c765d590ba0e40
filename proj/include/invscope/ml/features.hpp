#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invscope/domain.hpp"

namespace invscope::ml {

inline constexpr std::size_t kHashBuckets = 16;

/// Severity one-hot (4), detector and asset hash one-hots (16 each), then
/// eight scalars: domain_flag, event_count, unique_source_count,
/// unique_asset_count, span_seconds, mean_gap_seconds, hour_of_day_sin,
/// hour_of_day_cos.
inline constexpr std::size_t kFeatureCount = 4 + 2 * kHashBuckets + 8;

using FeatureVector = Eigen::VectorXd;

const std::vector<std::string>& feature_names();

/// FNV-1a 32 modulo the bucket count.
std::size_t hash_bucket(std::string_view text);

/// `events` are the alert's referenced events; throws Precondition when
/// empty.
FeatureVector extract_features(const Alert& alert, std::span<const Event> events);

}  // namespace invscope::ml
