#include "invscope/sync.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "invscope/correlation/engine.hpp"
#include "invscope/error.hpp"
#include "invscope/id.hpp"
#include "invscope/ml/scoring.hpp"

namespace invscope::sync {

namespace fs = std::filesystem;

std::string_view to_string(EndpointKind k)
{
    return k == EndpointKind::CorrelationDir ? "correlation_dir" : "imp_dir";
}

std::string_view to_string(EndpointFormat f)
{
    switch (f) {
    case EndpointFormat::IdsKv: return "ids-kv";
    case EndpointFormat::AccessJson: return "access-json";
    case EndpointFormat::Canonical: return "canonical";
    case EndpointFormat::Alerts: return "alerts";
    case EndpointFormat::Classifications: return "classifications";
    }
    return "canonical";
}

std::string_view to_string(Mode m) { return m == Mode::Embedded ? "embedded" : "passthrough"; }

std::string_view to_string(Trigger t) { return t == Trigger::Scheduled ? "scheduled" : "manual"; }

std::optional<EndpointKind> parse_endpoint_kind(std::string_view text)
{
    if (text == "correlation_dir") return EndpointKind::CorrelationDir;
    if (text == "imp_dir") return EndpointKind::ImpDir;
    return std::nullopt;
}

std::optional<EndpointFormat> parse_endpoint_format(std::string_view text)
{
    for (auto f : {EndpointFormat::IdsKv, EndpointFormat::AccessJson, EndpointFormat::Canonical,
                   EndpointFormat::Alerts, EndpointFormat::Classifications}) {
        if (to_string(f) == text) return f;
    }
    return std::nullopt;
}

std::optional<Mode> parse_mode(std::string_view text)
{
    if (text == "embedded") return Mode::Embedded;
    if (text == "passthrough") return Mode::Passthrough;
    return std::nullopt;
}

json to_json(const SyncReport& r)
{
    json endpoints = json::array();
    for (const auto& e : r.endpoints) {
        json j{{"name", e.name},
               {"read", e.read},
               {"accepted", e.accepted},
               {"duplicates", e.duplicates},
               {"rejects", e.rejects}};
        j["error"] = e.error ? json(*e.error) : json(nullptr);
        endpoints.push_back(std::move(j));
    }
    json out{{"endpoints", endpoints},
             {"alerts_raised", r.alerts_raised},
             {"alerts_scored", r.alerts_scored},
             {"scoring_skipped", r.scoring_skipped},
             {"started_at", r.started_at.to_string()},
             {"finished_at", r.finished_at.to_string()},
             {"trigger", to_string(r.trigger)}};
    out["error"] = r.error ? json(*r.error) : json(nullptr);
    return out;
}

std::optional<Incident> parse_classification_line(std::string_view line, std::string* reason)
{
    auto fail = [&](const char* why) -> std::optional<Incident> {
        if (reason) *reason = why;
        return std::nullopt;
    };
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return fail("not_json_object");
    const auto text = [&](const char* key) -> std::optional<std::string> {
        const auto it = j.find(key);
        if (it == j.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) return std::nullopt;
        return it->get<std::string>();
    };
    const auto alert_id = text("alert_id");
    const auto cls = text("classification");
    const auto by = text("classified_by");
    const auto time = text("time");
    if (!alert_id || !cls || !by || !time) return fail("missing_required_key");
    const auto classification = parse_classification(*cls);
    if (!classification) return fail("bad_classification");
    const auto at = Timestamp::parse(*time);
    if (!at) return fail("bad_timestamp");

    Incident i;
    i.id = derive_id(*at, "incident|" + *alert_id);
    i.alert_id = *alert_id;
    i.classification = *classification;
    i.classified_by = *by;
    i.classified_at = *at;
    if (const auto note = j.find("note"); note != j.end() && note->is_string()) i.note = note->get<std::string>();
    return i;
}

json classification_record(const Incident& i)
{
    json j{{"alert_id", i.alert_id},
           {"classification", to_string(i.classification)},
           {"classified_by", i.classified_by},
           {"time", i.classified_at.to_string()}};
    if (i.note) j["note"] = *i.note;
    return j;
}

PendingInput read_pending(const fs::path& dir, const store::Watermark& from)
{
    if (!fs::is_directory(dir)) throw Error(ErrorCode::NotFound, "endpoint directory missing: " + dir.string());
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file() || name.empty() || name.front() == '.') continue;
        if (name < from.file) continue;
        files.push_back(name);
    }
    std::sort(files.begin(), files.end());

    PendingInput out;
    out.next = from;
    for (std::size_t k = 0; k < files.size(); ++k) {
        const bool last_file = k + 1 == files.size();
        std::ifstream in(dir / files[k], std::ios::binary);
        if (!in) throw Error(ErrorCode::NotFound, "cannot read " + (dir / files[k]).string());
        const std::uint64_t start = files[k] == from.file ? from.offset : 0;
        in.seekg(0, std::ios::end);
        const auto size = static_cast<std::uint64_t>(in.tellg());
        if (size <= start) continue;
        std::string buf(size - start, '\0');
        in.seekg(static_cast<std::streamoff>(start));
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));

        // The newest file may still be written to, so its unterminated tail
        // waits for the next cycle. Older files are complete.
        std::size_t usable = buf.size();
        if (last_file) {
            const auto nl = buf.rfind('\n');
            usable = nl == std::string::npos ? 0 : nl + 1;
        }
        if (usable == 0) continue;
        std::size_t pos = 0;
        while (pos < usable) {
            std::size_t nl = buf.find('\n', pos);
            if (nl == std::string::npos || nl >= usable) nl = usable;
            std::string line = buf.substr(pos, nl - pos);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            out.lines.push_back(std::move(line));
            pos = nl + 1;
        }
        out.next = store::Watermark{files[k], start + usable};
    }
    return out;
}

EndpointReport import_classifications(store::Store& store, std::span<const std::string> lines)
{
    EndpointReport r;
    for (const auto& line : lines) {
        if (ingest::is_blank(line)) continue;
        ++r.read;
        const auto incident = parse_classification_line(line);
        if (!incident || !store.find_alert(incident->alert_id)) {
            ++r.rejects;
            continue;
        }
        if (store.incident_for(incident->alert_id)) {
            ++r.duplicates;
            continue;
        }
        store.put_incident(*incident);
        ++r.accepted;
    }
    return r;
}

SyncService::SyncService(store::Store& store, std::vector<Endpoint> endpoints, Mode mode,
                         std::vector<correlation::Rule> rules)
    : store_(store), endpoints_(std::move(endpoints)), mode_(mode), rules_(std::move(rules))
{
    std::set<std::string> names;
    for (const auto& e : endpoints_) {
        if (!names.insert(e.name).second) throw Error(ErrorCode::InvalidInput, "duplicate endpoint name " + e.name);
        const bool imp_format = e.format == EndpointFormat::Classifications;
        if ((e.kind == EndpointKind::ImpDir) != imp_format) {
            throw Error(ErrorCode::InvalidInput, "endpoint " + e.name + " has a format its kind cannot carry");
        }
    }
}

void SyncService::set_model(std::shared_ptr<const ml::Model> model)
{
    std::lock_guard lock(model_mu_);
    model_ = std::move(model);
}

std::shared_ptr<const ml::Model> SyncService::model() const
{
    std::lock_guard lock(model_mu_);
    return model_;
}

namespace {

std::optional<ingest::SourceFormat> event_format(EndpointFormat f)
{
    switch (f) {
    case EndpointFormat::IdsKv: return ingest::SourceFormat::IdsKv;
    case EndpointFormat::AccessJson: return ingest::SourceFormat::AccessJson;
    case EndpointFormat::Canonical: return ingest::SourceFormat::CanonicalJsonl;
    default: return std::nullopt;
    }
}

struct Pulled {
    const Endpoint* endpoint = nullptr;
    EndpointReport* report = nullptr;
    PendingInput input;
};

/// Alert is storable when valid, fully resolvable and not raised before its
/// events.
bool passthrough_alert_ok(const store::Store& store, const Alert& a)
{
    if (!validate_alert(a).empty()) return false;
    for (const auto& eid : a.event_ids) {
        const auto e = store.find_event(eid);
        if (!e || e->occurred_at > a.raised_at) return false;
    }
    return true;
}

}  // namespace

SyncReport SyncService::run_cycle(Trigger trigger)
{
    SyncReport report;
    report.trigger = trigger;
    report.started_at = Timestamp::now();
    // Reserved up front so Pulled::report pointers stay valid.
    report.endpoints.reserve(endpoints_.size());

    const auto marks = store_.meta().watermarks;
    std::vector<Pulled> pulled;
    for (const auto& ep : endpoints_) {
        report.endpoints.push_back(EndpointReport{ep.name, 0, 0, 0, 0, std::nullopt});
        const auto it = marks.find(ep.name);
        try {
            Pulled p{&ep, &report.endpoints.back(),
                     read_pending(ep.path, it == marks.end() ? store::Watermark{} : it->second)};
            pulled.push_back(std::move(p));
        } catch (const std::exception& e) {
            report.endpoints.back().error = e.what();
        }
    }
    std::map<std::string, store::Watermark> advanced;
    try {
        // Events from every event endpoint, then correlation over the
        // combined batch, then passthrough alerts, then classifications.
        std::vector<Event> batch;
        for (auto& p : pulled) {
            const auto format = event_format(p.endpoint->format);
            if (!format) continue;
            std::vector<Event> events;
            for (const auto& line : p.input.lines) {
                if (ingest::is_blank(line)) continue;
                ++p.report->read;
                auto parsed = ingest::parse_line(*format, line);
                if (auto* e = std::get_if<Event>(&parsed)) events.push_back(std::move(*e));
                else ++p.report->rejects;
            }
            const std::size_t stored = store_.put_events(events);
            p.report->accepted = stored;
            p.report->duplicates = events.size() - stored;
            batch.insert(batch.end(), std::make_move_iterator(events.begin()), std::make_move_iterator(events.end()));
        }
        if (mode_ == Mode::Embedded && !batch.empty() && !rules_.empty()) {
            std::stable_sort(batch.begin(), batch.end(),
                             [](const Event& a, const Event& b) { return a.occurred_at < b.occurred_at; });
            const auto alerts = correlation::evaluate_stream(batch, rules_);
            report.alerts_raised += store_.put_alerts(alerts);
        }

        for (auto& p : pulled) {
            if (p.endpoint->format != EndpointFormat::Alerts) continue;
            std::vector<Alert> alerts;
            for (const auto& line : p.input.lines) {
                if (ingest::is_blank(line)) continue;
                ++p.report->read;
                const json j = json::parse(line, nullptr, false);
                std::optional<Alert> a;
                if (!j.is_discarded()) {
                    try {
                        a = alert_from_json(j);
                    } catch (const Error&) {
                    }
                }
                if (a && passthrough_alert_ok(store_, *a)) alerts.push_back(std::move(*a));
                else ++p.report->rejects;
            }
            const std::size_t stored = store_.put_alerts(alerts);
            p.report->accepted = stored;
            p.report->duplicates = alerts.size() - stored;
            report.alerts_raised += stored;
        }

        for (auto& p : pulled) {
            if (p.endpoint->format != EndpointFormat::Classifications) continue;
            const auto counts = import_classifications(store_, p.input.lines);
            p.report->read = counts.read;
            p.report->accepted = counts.accepted;
            p.report->duplicates = counts.duplicates;
            p.report->rejects = counts.rejects;
        }

        for (const auto& p : pulled) {
            if (p.input.next != (marks.contains(p.endpoint->name) ? marks.at(p.endpoint->name) : store::Watermark{})) {
                advanced[p.endpoint->name] = p.input.next;
            }
        }
        if (!advanced.empty()) store_.set_watermarks(advanced);
    } catch (const Error& e) {
        report.error = e.what();
        report.finished_at = std::max(Timestamp::now(), report.started_at);
        return report;
    }

    if (const auto model = this->model()) {
        try {
            const auto scored = ml::score_pending(store_, *model, Timestamp::now());
            report.alerts_scored = scored.scored;
            report.scoring_skipped = scored.skipped.size();
        } catch (const Error& e) {
            report.error = std::string("scoring failed: ") + e.what();
        }
    }
    report.finished_at = std::max(Timestamp::now(), report.started_at);
    return report;
}

}  // namespace invscope::sync
