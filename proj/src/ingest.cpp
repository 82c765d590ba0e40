#include "invscope/ingest.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "invscope/codec.hpp"
#include "invscope/error.hpp"
#include "invscope/id.hpp"
#include "invscope/store.hpp"

namespace invscope::ingest {

namespace {

constexpr std::size_t kCommitChunk = 1000;

Rejection reject(std::string reason) { return Rejection{std::move(reason)}; }

std::string_view trim_eol(std::string_view line)
{
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
    return line;
}

/// Event id is a function of the dedup key so a re-parsed record resolves
/// to the already stored event.
std::string event_id_for(Timestamp occurred_at, std::string_view source, std::string_view native_ref)
{
    return derive_id(occurred_at, dedup_key(source, native_ref));
}

}  // namespace

std::optional<SourceFormat> parse_format(std::string_view text)
{
    if (text == "ids-kv") return SourceFormat::IdsKv;
    if (text == "access-json") return SourceFormat::AccessJson;
    if (text == "canonical") return SourceFormat::CanonicalJsonl;
    return std::nullopt;
}

std::string_view to_string(SourceFormat f)
{
    switch (f) {
    case SourceFormat::IdsKv: return "ids-kv";
    case SourceFormat::AccessJson: return "access-json";
    case SourceFormat::CanonicalJsonl: return "canonical";
    }
    return "canonical";
}

bool is_blank(std::string_view line)
{
    return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
}

std::optional<KvTokens> tokenize_kv(std::string_view line)
{
    KvTokens tokens;
    std::size_t i = 0;
    const std::size_t n = line.size();
    while (i < n) {
        while (i < n && line[i] == ' ') ++i;
        if (i == n) break;

        const std::size_t key_start = i;
        while (i < n && line[i] != '=' && line[i] != ' ' && line[i] != '"') ++i;
        if (i == n || line[i] != '=' || i == key_start) return std::nullopt;
        std::string key(line.substr(key_start, i - key_start));
        ++i;  // '='

        std::string value;
        if (i < n && line[i] == '"') {
            const std::size_t close = line.find('"', i + 1);
            if (close == std::string_view::npos) return std::nullopt;
            value.assign(line.substr(i + 1, close - i - 1));
            i = close + 1;
            if (i < n && line[i] != ' ') return std::nullopt;
        } else {
            const std::size_t start = i;
            while (i < n && line[i] != ' ' && line[i] != '"') ++i;
            if (i == start || (i < n && line[i] == '"')) return std::nullopt;
            value.assign(line.substr(start, i - start));
        }
        tokens.emplace_back(std::move(key), std::move(value));
    }
    return tokens;
}

ParseResult parse_ids_line(std::string_view raw)
{
    const auto tokens = tokenize_kv(trim_eol(raw));
    if (!tokens || tokens->empty()) return reject("malformed_token");

    std::map<std::string, std::string, std::less<>> fields;
    for (const auto& [k, v] : *tokens) {
        if (!valid_attribute_key(k) || !fields.emplace(k, v).second) return reject("malformed_token");
    }
    for (const char* required : {"ts", "sensor", "sig", "asset", "ref"}) {
        const auto it = fields.find(required);
        if (it == fields.end() || it->second.empty()) return reject("missing_required_key");
    }
    const auto ts = Timestamp::parse(fields.at("ts"));
    if (!ts) return reject("bad_timestamp");

    Event e;
    e.domain = SensorDomain::Cyber;
    e.occurred_at = *ts;
    e.source_id = fields.at("sensor");
    e.kind = "ids." + fields.at("sig");
    e.asset = fields.at("asset");
    e.native_ref = fields.at("ref");
    for (auto& [k, v] : fields) {
        if (k == "ts" || k == "sensor" || k == "sig" || k == "asset" || k == "ref") continue;
        e.attributes.emplace(k, v);
    }
    e.id = event_id_for(e.occurred_at, e.source_id, e.native_ref);
    return e;
}

ParseResult parse_access_record(std::string_view record)
{
    static const std::set<std::string, std::less<>> kActions{"badge_ok", "badge_denied", "door_forced", "door_held"};

    json j;
    try {
        j = json::parse(trim_eol(record));
    } catch (const json::exception&) {
        return reject("not_json_object");
    }
    if (!j.is_object()) return reject("not_json_object");

    auto scalar_text = [&](const char* key) -> std::optional<std::string> {
        const auto it = j.find(key);
        if (it == j.end()) return std::nullopt;
        if (it->is_string()) return it->get<std::string>();
        if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
        return std::nullopt;
    };

    std::array<std::optional<std::string>, 6> req;
    const std::array<const char*, 6> names{"time", "reader", "action", "badge_id", "zone", "seq"};
    for (std::size_t i = 0; i < names.size(); ++i) {
        req[i] = scalar_text(names[i]);
        if (!req[i] || req[i]->empty()) return reject("missing_required_key");
    }
    if (!kActions.contains(*req[2])) return reject("unknown_action");
    const auto ts = Timestamp::parse(*req[0]);
    if (!ts) return reject("bad_timestamp");

    Event e;
    e.domain = SensorDomain::Physical;
    e.occurred_at = *ts;
    e.source_id = *req[1];
    e.kind = "access." + *req[2];
    e.asset = *req[4];
    e.native_ref = *req[5];
    e.attributes.emplace("badge_id", *req[3]);
    for (const auto& [k, v] : j.items()) {
        if (std::find(names.begin(), names.end(), k) != names.end() || !valid_attribute_key(k)) continue;
        if (v.is_string()) e.attributes.emplace(k, v.get<std::string>());
        else if (v.is_boolean()) e.attributes.emplace(k, v.get<bool>());
        else if (v.is_number_integer()) e.attributes.emplace(k, v.get<std::int64_t>());
    }
    e.id = event_id_for(e.occurred_at, e.source_id, e.native_ref);
    return e;
}

ParseResult parse_canonical_line(std::string_view line)
{
    json j;
    try {
        j = json::parse(trim_eol(line));
    } catch (const json::exception&) {
        return reject("not_json_object");
    }
    if (!j.is_object()) return reject("not_json_object");
    try {
        Event e = event_from_json(j);
        if (!validate_event(e).empty()) return reject("invalid_event");
        return e;
    } catch (const Error&) {
        return reject("invalid_event");
    }
}

ParseResult parse_line(SourceFormat format, std::string_view line)
{
    switch (format) {
    case SourceFormat::IdsKv: return parse_ids_line(line);
    case SourceFormat::AccessJson: return parse_access_record(line);
    case SourceFormat::CanonicalJsonl: return parse_canonical_line(line);
    }
    return reject("unknown_format");
}

ParseReport ingest_batch(std::istream& lines, SourceFormat format, store::Store& store)
{
    ParseReport report;
    std::vector<Event> pending;

    auto commit = [&]() -> bool {
        if (pending.empty()) return true;
        try {
            const std::size_t written = store.put_events(pending);
            report.accepted += written;
            report.duplicates_skipped += pending.size() - written;
        } catch (const Error& e) {
            report.storage_error = e.what();
            return false;
        }
        pending.clear();
        return true;
    };

    std::string line;
    std::size_t line_number = 0;
    while (std::getline(lines, line)) {
        ++line_number;
        if (is_blank(line)) continue;
        ParseResult r = parse_line(format, line);
        if (auto* rej = std::get_if<Rejection>(&r)) {
            ++report.rejected;
            report.rejects.push_back({line_number, rej->reason});
            continue;
        }
        pending.push_back(std::move(std::get<Event>(r)));
        if (pending.size() >= kCommitChunk && !commit()) return report;
    }
    commit();
    return report;
}

}  // namespace invscope::ingest
