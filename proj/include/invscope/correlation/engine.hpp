#pragma once

#include <span>
#include <string>
#include <vector>

#include "invscope/correlation/rules.hpp"
#include "invscope/domain.hpp"

namespace invscope::correlation {

/// Runs every rule over a stream sorted by occurred_at (throws
/// Precondition otherwise). Per (rule, group key) an alert fires the moment
/// the event-time window [t - window, t] holds `threshold` matching events;
/// the group is then suppressed for `suppress_seconds` and re-arms empty.
/// Alerts come out ordered by raised_at.
std::vector<Alert> evaluate_stream(std::span<const Event> events, std::span<const Rule> rules);

/// One-paragraph explanation: rule name, threshold, window, group key,
/// event count and the first/last event timestamps.
std::string render_justification(const Rule& rule, std::span<const Event> matched);

/// Join form: names both the primary and the secondary pattern.
std::string render_justification(const Rule& rule, std::span<const Event> primary,
                                 std::span<const Event> secondary);

/// `selector=value` pairs for the rule's group_by, or nullopt when an
/// event lacks one of the fields.
std::optional<std::string> group_key(const Rule& rule, const Event& e);

/// Builds the Alert record for a set of matched events (deterministic id).
Alert make_alert(const Rule& rule, std::span<const Event> primary, std::span<const Event> secondary);

}  // namespace invscope::correlation
