#include "invscope/codec.hpp"

#include "invscope/error.hpp"

namespace invscope {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::InvalidInput, what); }

const json& field(const json& j, const char* name)
{
    if (!j.is_object()) fail("expected a JSON object");
    const auto it = j.find(name);
    if (it == j.end()) fail(std::string("missing field '") + name + "'");
    return *it;
}

std::string text_field(const json& j, const char* name)
{
    const json& v = field(j, name);
    if (!v.is_string()) fail(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

Timestamp time_field(const json& j, const char* name)
{
    const auto t = Timestamp::parse(text_field(j, name));
    if (!t) fail(std::string("field '") + name + "' is not an RFC-3339 timestamp");
    return *t;
}

template <typename Enum, typename Parser>
Enum enum_field(const json& j, const char* name, Parser parse)
{
    const auto v = parse(text_field(j, name));
    if (!v) fail(std::string("field '") + name + "' has an unknown value");
    return *v;
}

}  // namespace

json to_json(const AttrValue& v)
{
    return std::visit([](const auto& x) { return json(x); }, v);
}

json to_json(const Attributes& attrs)
{
    json out = json::object();
    for (const auto& [k, v] : attrs) out[k] = to_json(v);
    return out;
}

Attributes attributes_from_json(const json& j)
{
    if (!j.is_object()) fail("attributes must be an object");
    Attributes out;
    for (const auto& [k, v] : j.items()) {
        if (v.is_string()) out.emplace(k, v.get<std::string>());
        else if (v.is_boolean()) out.emplace(k, v.get<bool>());
        else if (v.is_number_integer()) out.emplace(k, v.get<std::int64_t>());
        else fail("attribute '" + k + "' must be a string, integer or boolean");
    }
    return out;
}

json to_json(const Event& e)
{
    return json{{"id", e.id},
                {"source_id", e.source_id},
                {"domain", to_string(e.domain)},
                {"occurred_at", e.occurred_at.to_string()},
                {"kind", e.kind},
                {"asset", e.asset},
                {"attributes", to_json(e.attributes)},
                {"native_ref", e.native_ref}};
}

Event event_from_json(const json& j)
{
    Event e;
    e.id = text_field(j, "id");
    e.source_id = text_field(j, "source_id");
    e.domain = enum_field<SensorDomain>(j, "domain", parse_domain);
    e.occurred_at = time_field(j, "occurred_at");
    e.kind = text_field(j, "kind");
    e.asset = text_field(j, "asset");
    e.attributes = attributes_from_json(field(j, "attributes"));
    e.native_ref = text_field(j, "native_ref");
    return e;
}

json to_json(const Alert& a)
{
    return json{{"id", a.id},
                {"rule_id", a.rule_id},
                {"severity", to_string(a.severity)},
                {"domain", to_string(a.domain)},
                {"detector", a.detector},
                {"asset", a.asset},
                {"raised_at", a.raised_at.to_string()},
                {"event_ids", a.event_ids},
                {"justification", a.justification},
                {"status", to_string(a.status)},
                {"attributes", to_json(a.attributes)}};
}

Alert alert_from_json(const json& j)
{
    Alert a;
    a.id = text_field(j, "id");
    a.rule_id = text_field(j, "rule_id");
    a.severity = enum_field<Severity>(j, "severity", parse_severity);
    a.domain = enum_field<SensorDomain>(j, "domain", parse_domain);
    a.detector = text_field(j, "detector");
    a.asset = text_field(j, "asset");
    a.raised_at = time_field(j, "raised_at");
    const json& ids = field(j, "event_ids");
    if (!ids.is_array()) fail("event_ids must be an array");
    for (const auto& id : ids) {
        if (!id.is_string()) fail("event_ids entries must be strings");
        a.event_ids.push_back(id.get<std::string>());
    }
    a.justification = text_field(j, "justification");
    a.status = enum_field<AlertStatus>(j, "status", parse_status);
    if (j.contains("attributes")) a.attributes = attributes_from_json(j.at("attributes"));
    return a;
}

json to_json(const Incident& i)
{
    json out{{"id", i.id},
             {"alert_id", i.alert_id},
             {"classification", to_string(i.classification)},
             {"classified_by", i.classified_by},
             {"classified_at", i.classified_at.to_string()}};
    if (i.note) out["note"] = *i.note;
    return out;
}

Incident incident_from_json(const json& j)
{
    Incident i;
    i.id = text_field(j, "id");
    i.alert_id = text_field(j, "alert_id");
    i.classification = enum_field<Classification>(j, "classification", parse_classification);
    i.classified_by = text_field(j, "classified_by");
    i.classified_at = time_field(j, "classified_at");
    if (j.contains("note") && !j.at("note").is_null()) i.note = text_field(j, "note");
    return i;
}

json to_json(const MlScore& s)
{
    return json{{"alert_id", s.alert_id},
                {"probability", s.probability},
                {"model_id", s.model_id},
                {"scored_at", s.scored_at.to_string()}};
}

MlScore score_from_json(const json& j)
{
    MlScore s;
    s.alert_id = text_field(j, "alert_id");
    const json& p = field(j, "probability");
    if (!p.is_number()) fail("probability must be a number");
    s.probability = p.get<double>();
    if (!(s.probability >= 0.0 && s.probability <= 1.0)) fail("probability outside [0,1]");
    s.model_id = text_field(j, "model_id");
    s.scored_at = time_field(j, "scored_at");
    return s;
}

}  // namespace invscope
