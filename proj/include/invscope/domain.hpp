#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "invscope/timestamp.hpp"

namespace invscope {

enum class SensorDomain { Cyber, Physical };

/// Total order Info < Low < Medium < High.
enum class Severity { Info, Low, Medium, High };

enum class AlertStatus { Open, Closed };

enum class Classification { Confirmed, Irrelevant };

inline constexpr Severity kAllSeverities[] = {Severity::Info, Severity::Low, Severity::Medium,
                                              Severity::High};

std::string_view to_string(SensorDomain d);
std::string_view to_string(Severity s);
std::string_view to_string(AlertStatus s);
std::string_view to_string(Classification c);

std::optional<SensorDomain> parse_domain(std::string_view text);
std::optional<Severity> parse_severity(std::string_view text);
std::optional<AlertStatus> parse_status(std::string_view text);
std::optional<Classification> parse_classification(std::string_view text);

/// Flat scalar attribute value.
using AttrValue = std::variant<std::string, std::int64_t, bool>;
using Attributes = std::map<std::string, AttrValue, std::less<>>;

std::string attr_to_text(const AttrValue& v);

/// Attribute keys must match `[a-z0-9_.]+`.
bool valid_attribute_key(std::string_view key);

struct Event {
    std::string id;
    std::string source_id;
    SensorDomain domain = SensorDomain::Cyber;
    Timestamp occurred_at;
    std::string kind;
    std::string asset;
    Attributes attributes;
    std::string native_ref;

    bool operator==(const Event&) const = default;
};

struct Alert {
    std::string id;
    std::string rule_id;
    Severity severity = Severity::Info;
    SensorDomain domain = SensorDomain::Cyber;
    std::string detector;
    std::string asset;
    Timestamp raised_at;
    std::vector<std::string> event_ids;
    std::string justification;
    AlertStatus status = AlertStatus::Open;
    /// Extra flags such as `cross_domain` and `group_key`.
    Attributes attributes;

    bool cross_domain() const;
    bool operator==(const Alert&) const = default;
};

struct Incident {
    std::string id;
    std::string alert_id;
    Classification classification = Classification::Confirmed;
    std::string classified_by;
    Timestamp classified_at;
    std::optional<std::string> note;

    bool operator==(const Incident&) const = default;
};

struct MlScore {
    std::string alert_id;
    double probability = 0.0;
    std::string model_id;
    Timestamp scored_at;

    bool operator==(const MlScore&) const = default;
};

struct Violation {
    std::string code;
    std::string detail;
};

/// Every violated invariant, not just the first.
std::vector<Violation> validate_event(const Event& candidate);
std::vector<Violation> validate_alert(const Alert& candidate);

/// Source-system dedup key for an event.
std::string dedup_key(std::string_view source_id, std::string_view native_ref);

}  // namespace invscope
