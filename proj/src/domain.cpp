#include "invscope/domain.hpp"

#include <algorithm>

#include "invscope/error.hpp"
#include "invscope/id.hpp"

namespace invscope {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Referential: return "referential";
    case ErrorCode::StoreUnavailable: return "store_unavailable";
    case ErrorCode::Busy: return "busy";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Training: return "training";
    }
    return "unknown";
}

std::string_view to_string(SensorDomain d) { return d == SensorDomain::Cyber ? "cyber" : "physical"; }

std::string_view to_string(Severity s)
{
    switch (s) {
    case Severity::Info: return "info";
    case Severity::Low: return "low";
    case Severity::Medium: return "medium";
    case Severity::High: return "high";
    }
    return "info";
}

std::string_view to_string(AlertStatus s) { return s == AlertStatus::Open ? "open" : "closed"; }

std::string_view to_string(Classification c)
{
    return c == Classification::Confirmed ? "confirmed" : "irrelevant";
}

std::optional<SensorDomain> parse_domain(std::string_view text)
{
    if (text == "cyber") return SensorDomain::Cyber;
    if (text == "physical") return SensorDomain::Physical;
    return std::nullopt;
}

std::optional<Severity> parse_severity(std::string_view text)
{
    for (Severity s : kAllSeverities) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

std::optional<AlertStatus> parse_status(std::string_view text)
{
    if (text == "open") return AlertStatus::Open;
    if (text == "closed") return AlertStatus::Closed;
    return std::nullopt;
}

std::optional<Classification> parse_classification(std::string_view text)
{
    if (text == "confirmed") return Classification::Confirmed;
    if (text == "irrelevant") return Classification::Irrelevant;
    return std::nullopt;
}

std::string attr_to_text(const AttrValue& v)
{
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    return std::get<bool>(v) ? "true" : "false";
}

bool valid_attribute_key(std::string_view key)
{
    return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
    });
}

bool Alert::cross_domain() const
{
    const auto it = attributes.find("cross_domain");
    return it != attributes.end() && std::holds_alternative<bool>(it->second) && std::get<bool>(it->second);
}

std::vector<Violation> validate_event(const Event& e)
{
    std::vector<Violation> out;
    if (e.id.empty()) out.push_back({"missing_id", "id is empty"});
    else if (!is_valid_id(e.id)) out.push_back({"bad_id", "id is not a 26-character base32 identifier"});
    if (e.source_id.empty()) out.push_back({"missing_source_id", "source_id is empty"});
    if (e.kind.empty()) out.push_back({"missing_kind", "event kind is empty"});
    if (e.asset.empty()) out.push_back({"missing_asset", "asset is empty"});
    if (e.native_ref.empty()) out.push_back({"missing_native_ref", "native_ref is empty"});
    for (const auto& [key, value] : e.attributes) {
        if (key.empty()) out.push_back({"attribute_key_empty", "attribute with empty key"});
        else if (!valid_attribute_key(key)) out.push_back({"attribute_key_charset", "attribute key '" + key + "'"});
    }
    return out;
}

std::vector<Violation> validate_alert(const Alert& a)
{
    std::vector<Violation> out;
    if (!is_valid_id(a.id)) out.push_back({"bad_id", "alert id '" + a.id + "'"});
    if (a.rule_id.empty()) out.push_back({"missing_rule_id", "rule_id is empty"});
    if (a.event_ids.empty()) out.push_back({"no_events", "event_ids is empty"});
    if (a.justification.empty()) out.push_back({"missing_justification", "justification is empty"});
    for (const auto& [key, value] : a.attributes) {
        if (!valid_attribute_key(key)) out.push_back({"attribute_key_charset", "attribute key '" + key + "'"});
    }
    return out;
}

std::string dedup_key(std::string_view source_id, std::string_view native_ref)
{
    std::string key;
    key.reserve(source_id.size() + native_ref.size() + 1);
    key.append(source_id).push_back('\x1f');
    key.append(native_ref);
    return key;
}

}  // namespace invscope
