#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "invscope/domain.hpp"

namespace invscope {

using json = nlohmann::json;

// JSON encodings with field names as in the domain types. Decoders throw
// Error(InvalidInput) on any schema mismatch.

json to_json(const Event& e);
json to_json(const Alert& a);
json to_json(const Incident& i);
json to_json(const MlScore& s);
json to_json(const AttrValue& v);
json to_json(const Attributes& attrs);

Event event_from_json(const json& j);
Alert alert_from_json(const json& j);
Incident incident_from_json(const json& j);
MlScore score_from_json(const json& j);
Attributes attributes_from_json(const json& j);

/// One-line compact encoding (JSONL record without the newline).
template <typename T>
std::string encode_line(const T& value)
{
    return to_json(value).dump();
}

}  // namespace invscope
