#include "invscope/api.hpp"

#include <charconv>
#include <cmath>

#include <httplib.h>

#include "invscope/error.hpp"
#include "invscope/id.hpp"

namespace invscope::api {

bool constant_time_equal(std::string_view a, std::string_view b)
{
    // Length leaks, content does not.
    unsigned char diff = a.size() == b.size() ? 0 : 1;
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char x = i < a.size() ? static_cast<unsigned char>(a[i]) : 0;
        const unsigned char y = i < b.size() ? static_cast<unsigned char>(b[i]) : 0;
        diff |= static_cast<unsigned char>(x ^ y);
    }
    return diff == 0;
}

std::optional<std::string> StaticTokens::authenticate(std::string_view token) const
{
    std::optional<std::string> found;
    for (const auto& t : tokens_) {
        if (constant_time_equal(t.token, token) && !found) found = t.operator_id;
    }
    return found;
}

json to_json(const store::TimeHistogram& h)
{
    json buckets = json::array();
    for (const auto& [start, count] : h.buckets) buckets.push_back({{"start", start.to_string()}, {"count", count}});
    return json{{"from", h.from.to_string()},
                {"to", h.to.to_string()},
                {"bucket_width", "day"},
                {"buckets", buckets},
                {"total", h.total()}};
}

json to_json(const store::SeverityCounts& c)
{
    json j = json::object();
    for (const auto& [s, n] : c) j[std::string(invscope::to_string(s))] = n;
    return j;
}

json to_json(const store::DomainCounts& c)
{
    json j = json::object();
    for (const auto& [d, n] : c) j[std::string(invscope::to_string(d))] = n;
    return j;
}

json to_json(const store::ProbabilityHistogram& h)
{
    return json{{"bucket_width", h.bucket_width}, {"counts", h.counts}, {"scored", h.scored}, {"mean", h.mean}};
}

json to_json(const store::Gauge& g, Millis window)
{
    return json{{"current", g.current},
                {"threshold", g.threshold},
                {"state", g.warn ? "warn" : "ok"},
                {"window_seconds", window.count() / 1000}};
}

json to_json(const store::AlertSummary& s)
{
    return json{{"id", s.id},
                {"rule_id", s.rule_id},
                {"severity", invscope::to_string(s.severity)},
                {"domain", invscope::to_string(s.domain)},
                {"detector", s.detector},
                {"asset", s.asset},
                {"raised_at", s.raised_at.to_string()},
                {"status", invscope::to_string(s.status)},
                {"event_count", s.event_count},
                {"probability", s.probability ? json(*s.probability) : json(nullptr)},
                {"classification",
                 s.classification ? json(invscope::to_string(*s.classification)) : json(nullptr)}};
}

json to_json(const store::AlertPage& p)
{
    json items = json::array();
    for (const auto& s : p.items) items.push_back(to_json(s));
    return json{{"items", items}, {"total", p.total}};
}

json to_json(const store::AlertDetail& d)
{
    json events = json::array();
    for (const auto& e : d.events) events.push_back(invscope::to_json(e));
    return json{{"alert", invscope::to_json(d.alert)},
                {"events", events},
                {"score", d.score ? invscope::to_json(*d.score) : json(nullptr)},
                {"incident", d.incident ? invscope::to_json(*d.incident) : json(nullptr)}};
}

json dashboard(const store::Store& store, const store::AlertFilter& filter, const Settings& settings, Timestamp now)
{
    const auto [from, to] = store::resolve_range(filter, now);
    store::AlertFilter ranged = filter;
    ranged.from = from;
    ranged.to = to;
    const Millis window = seconds_ms(settings.gauge_window_seconds);
    return json{
        {"time_histogram", to_json(store.alert_time_histogram(ranged, now))},
        {"severity_counts", to_json(store.severity_counts(ranged))},
        {"domain_counts", to_json(store.domain_counts(ranged))},
        {"probability_histogram", to_json(store.probability_histogram(ranged))},
        {"gauge", to_json(store.alert_gauge(window, settings.gauge_threshold, now, filter), window)},
    };
}

namespace {

ApiResponse error_response(int status, std::string_view code, const std::string& message)
{
    return ApiResponse{status, json{{"error_code", code}, {"message", message}}};
}

int status_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict:
    case ErrorCode::Busy: return 409;
    case ErrorCode::StoreUnavailable: return 503;
    default: return 400;
    }
}

[[noreturn]] void bad_param(const std::string& name, const std::string& value)
{
    throw Error(ErrorCode::InvalidInput, "bad value for " + name + ": " + value);
}

template <typename T, typename Parse>
std::optional<T> param(const ApiRequest& r, const std::string& name, Parse parse)
{
    const auto it = r.query.find(name);
    if (it == r.query.end() || it->second.empty()) return std::nullopt;
    auto v = parse(it->second);
    if (!v) bad_param(name, it->second);
    return *v;
}

std::optional<std::size_t> parse_size(std::string_view s)
{
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<double> parse_probability(const std::string& s)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v) || v < 0.0 || v > 1.0) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

store::AlertFilter range_filter(const ApiRequest& r)
{
    store::AlertFilter f;
    f.from = param<Timestamp>(r, "from", Timestamp::parse);
    f.to = param<Timestamp>(r, "to", Timestamp::parse);
    if (f.from && f.to && *f.from > *f.to) throw Error(ErrorCode::InvalidInput, "inverted time range");
    return f;
}

std::vector<std::string> split_path(std::string_view path)
{
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const auto slash = path.find('/', pos);
        const auto end = slash == std::string_view::npos ? path.size() : slash;
        if (end > pos) parts.emplace_back(path.substr(pos, end - pos));
        if (slash == std::string_view::npos) break;
        pos = slash + 1;
    }
    return parts;
}

json parse_body(const std::string& body)
{
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidInput, "request body must be a JSON object");
    return j;
}

}  // namespace

ApiHandler::ApiHandler(store::Store& store, const Authenticator& auth, ApiHooks hooks)
    : store_(store), auth_(auth), hooks_(std::move(hooks))
{
}

Timestamp ApiHandler::now() const { return hooks_.clock ? hooks_.clock() : Timestamp::now(); }

Settings ApiHandler::current_settings() const { return hooks_.settings ? hooks_.settings() : Settings{}; }

ApiResponse ApiHandler::handle(const ApiRequest& request) const
{
    if (request.method == "GET" && request.path == "/api/health") {
        const bool ok = store_.available();
        return ApiResponse{200, json{{"ok", ok},
                                     {"store", ok ? "available" : "unavailable"},
                                     {"scheduler", hooks_.scheduler_status ? hooks_.scheduler_status()
                                                                           : json{{"running", false}}}}};
    }

    constexpr std::string_view kBearer = "Bearer ";
    std::optional<std::string> operator_id;
    if (request.authorization && request.authorization->starts_with(kBearer)) {
        operator_id = auth_.authenticate(std::string_view(*request.authorization).substr(kBearer.size()));
    }
    if (!operator_id) return error_response(401, "unauthenticated", "missing or invalid bearer token");

    try {
        return route(request, *operator_id);
    } catch (const Error& e) {
        return error_response(status_for(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        return error_response(400, "invalid_input", e.what());
    }
}

ApiResponse ApiHandler::route(const ApiRequest& r, const std::string& operator_id) const
{
    const auto parts = split_path(r.path);
    const auto& m = r.method;
    auto is = [&](std::initializer_list<std::string_view> want) {
        return parts.size() == want.size() && std::equal(want.begin(), want.end(), parts.begin());
    };

    if (m == "GET" && is({"api", "dashboards", "alerts"})) {
        auto f = range_filter(r);
        f.domain = param<SensorDomain>(r, "domain", parse_domain);
        return {200, dashboard(store_, f, current_settings(), now())};
    }
    if (m == "GET" && is({"api", "dashboards", "incidents"})) {
        auto f = range_filter(r);
        f.classification = Classification::Confirmed;
        return {200, dashboard(store_, f, current_settings(), now())};
    }
    if (m == "GET" && is({"api", "alerts"})) {
        auto f = range_filter(r);
        f.status = param<AlertStatus>(r, "status", parse_status);
        f.classification = param<Classification>(r, "classification", parse_classification);
        f.severity = param<Severity>(r, "severity", parse_severity);
        f.domain = param<SensorDomain>(r, "domain", parse_domain);
        f.min_probability = param<double>(r, "min_probability", parse_probability);
        const auto sort = param<store::SortKey>(r, "sort", [](std::string_view s) -> std::optional<store::SortKey> {
            if (s == "raised_at") return store::SortKey::RaisedAt;
            if (s == "probability") return store::SortKey::Probability;
            return std::nullopt;
        });
        const auto offset = param<std::size_t>(r, "offset", parse_size).value_or(0);
        const auto limit = param<std::size_t>(r, "limit", parse_size).value_or(50);
        return {200, to_json(store_.list_alerts(f, sort.value_or(store::SortKey::RaisedAt), offset, limit))};
    }
    if (m == "GET" && parts.size() == 3 && parts[0] == "api" && parts[1] == "alerts") {
        return {200, to_json(store_.get_alert_detail(parts[2]))};
    }
    if (m == "POST" && parts.size() == 4 && parts[0] == "api" && parts[1] == "alerts" &&
        parts[3] == "classification") {
        const json body = parse_body(r.body);
        const auto cls_it = body.find("classification");
        if (cls_it == body.end() || !cls_it->is_string()) {
            throw Error(ErrorCode::InvalidInput, "classification is required");
        }
        const auto cls = parse_classification(cls_it->get<std::string>());
        if (!cls) throw Error(ErrorCode::InvalidInput, "classification must be confirmed or irrelevant");
        if (!store_.find_alert(parts[2])) throw Error(ErrorCode::NotFound, "unknown alert " + parts[2]);

        Incident i;
        i.classified_at = now();
        i.id = derive_id(i.classified_at, "incident|" + parts[2]);
        i.alert_id = parts[2];
        i.classification = *cls;
        i.classified_by = operator_id;
        if (const auto note = body.find("note"); note != body.end() && !note->is_null()) {
            if (!note->is_string()) throw Error(ErrorCode::InvalidInput, "note must be a string");
            i.note = note->get<std::string>();
        }
        store_.put_incident(i);
        return {200, invscope::to_json(i)};
    }
    if (m == "POST" && is({"api", "sync"})) {
        if (!hooks_.trigger_sync) throw Error(ErrorCode::StoreUnavailable, "sync is not configured");
        const auto report = hooks_.trigger_sync();
        if (!report) throw Error(ErrorCode::Busy, "a sync cycle is already running");
        return {200, sync::to_json(*report)};
    }
    if (m == "GET" && is({"api", "settings"})) {
        return {200, to_json(current_settings())};
    }
    if (m == "PUT" && is({"api", "settings"})) {
        if (!hooks_.update_settings) throw Error(ErrorCode::StoreUnavailable, "settings are read-only");
        return {200, to_json(hooks_.update_settings(parse_body(r.body)))};
    }
    return error_response(404, "not_found", "no route for " + m + " " + r.path);
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(const ApiHandler& handler, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>())
{
    auto dispatch = [&handler](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        if (req.has_header("Authorization")) r.authorization = req.get_header_value("Authorization");
        r.body = req.body;
        const ApiResponse out = handler.handle(r);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    impl_->server.Get("/api/.*", dispatch);
    impl_->server.Post("/api/.*", dispatch);
    impl_->server.Put("/api/.*", dispatch);
    impl_->server.Delete("/api/.*", dispatch);
    if (static_dir && !impl_->server.set_mount_point("/", static_dir->string())) {
        throw Error(ErrorCode::NotFound, "static directory missing: " + static_dir->string());
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port)
{
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error(ErrorCode::InvalidInput, "cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error(ErrorCode::InvalidInput, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop()
{
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace invscope::api
