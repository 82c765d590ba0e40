#include "random_data.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>
#include <string>

#include "invscope/error.hpp"
#include "invscope/id.hpp"

namespace invscope::testing {

Event make_event(std::string source, std::string ref, Timestamp t, std::string kind, std::string asset,
                 Attributes attrs, SensorDomain domain)
{
    Event e;
    e.source_id = std::move(source);
    e.native_ref = std::move(ref);
    e.occurred_at = t;
    e.kind = std::move(kind);
    e.asset = std::move(asset);
    e.attributes = std::move(attrs);
    e.domain = domain;
    e.id = derive_id(t, dedup_key(e.source_id, e.native_ref));
    return e;
}

std::vector<Event> random_stream(Rng& rng, std::size_t max_events)
{
    static const char* kKinds[] = {"ids.failed_login", "ids.port_probe", "access.badge_denied", "access.door_forced"};
    static const char* kAssets[] = {"zone-a", "zone-b", "srv-1", "srv-2"};
    static const char* kIps[] = {"10.0.0.1", "10.0.0.2", "10.0.0.3"};

    const auto n = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(max_events)));
    std::vector<Event> out;
    out.reserve(n);
    Timestamp t = Timestamp::from_millis(1'700'000'000'000);
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() > 0.1) t = t + Millis(rng.between(1, 20'000));
        const auto kind_idx = rng.index(4);
        const bool physical = kind_idx >= 2;
        Attributes attrs;
        if (rng.uniform() < 0.85) attrs["src_ip"] = std::string(kIps[rng.index(3)]);
        attrs["zone"] = std::string(kAssets[rng.index(2)]);
        attrs["count"] = static_cast<std::int64_t>(rng.between(0, 10));
        const std::string asset = kAssets[rng.index(4)];
        out.push_back(make_event(physical ? "reader-1" : "ids-1", "r" + std::to_string(i), t, kKinds[kind_idx], asset,
                                 std::move(attrs), physical ? SensorDomain::Physical : SensorDomain::Cyber));
    }
    return out;
}

namespace {

json random_predicate(Rng& rng)
{
    static const char* kKinds[] = {"ids.failed_login", "ids.port_probe", "access.badge_denied", "access.door_forced"};
    switch (rng.index(4)) {
    case 0: return {{"field", "kind"}, {"op", "eq"}, {"value", kKinds[rng.index(4)]}};
    case 1: return {{"field", "kind"}, {"op", "prefix"}, {"value", rng.uniform() < 0.5 ? "ids." : "access."}};
    case 2: return {{"field", "kind"}, {"op", "in_set"}, {"value", {kKinds[rng.index(4)], kKinds[rng.index(4)]}}};
    default:
        return {{"all_of",
                 {{{"field", "kind"}, {"op", "prefix"}, {"value", "ids."}},
                  {{"field", "attributes.count"}, {"op", "gte"}, {"value", rng.between(0, 6)}}}}};
    }
}

}  // namespace

std::vector<correlation::Rule> random_rules(Rng& rng, std::size_t max_rules)
{
    static const char* kGroupings[][2] = {{nullptr, nullptr}, {"asset", nullptr}, {"attributes.src_ip", nullptr},
                                          {"asset", "attributes.src_ip"}};
    const auto n = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(max_rules)));
    json rules = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        json r{{"rule_id", "r" + std::to_string(i)},
               {"name", "random rule " + std::to_string(i)},
               {"severity", std::array{"info", "low", "medium", "high"}[rng.index(4)]},
               {"detector", "det" + std::to_string(rng.index(3))},
               {"predicate", random_predicate(rng)},
               {"threshold", rng.between(1, 5)},
               {"window_seconds", rng.between(1, 120)}};
        json group = json::array();
        for (const char* g : kGroupings[rng.index(4)]) {
            if (g) group.push_back(g);
        }
        r["group_by"] = group;
        if (rng.uniform() < 0.6) r["suppress_seconds"] = rng.between(0, 120);
        if (rng.uniform() < 0.35) {
            const bool zone_join = rng.uniform() < 0.5;
            r["join"] = {{"predicate", random_predicate(rng)},
                         {"primary_field", zone_join ? "asset" : "attributes.src_ip"},
                         {"secondary_field", zone_join ? "attributes.zone" : "attributes.src_ip"},
                         {"max_gap_seconds", rng.between(1, 300)},
                         {"order", rng.uniform() < 0.5 ? "primary_then_secondary" : "any_order"}};
        }
        rules.push_back(std::move(r));
    }
    auto compiled = correlation::compile_rules(json{{"rules", rules}}.dump());
    if (!compiled.ok()) throw Error(ErrorCode::InvalidInput, "random rules failed to compile: " + compiled.errors[0].message);
    return std::move(compiled.rules);
}

StoreFixture random_store(Rng& rng, std::size_t max_records, Timestamp now, int days)
{
    StoreFixture f;
    const auto budget = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(max_records)));
    const std::size_t n_events = budget / 3 + 1;
    const std::int64_t span_ms = static_cast<std::int64_t>(days) * 86'400'000;
    const Timestamp begin = now - Millis(span_ms);
    static const char* kModels[] = {"logreg-v1-a", "forest-v1-b", "logreg-v1-c"};

    for (std::size_t i = 0; i < n_events; ++i) {
        const Timestamp t = begin + Millis(rng.between(0, span_ms));
        const bool physical = rng.uniform() < 0.4;
        f.events.push_back(make_event(physical ? "reader" : "ids", "e" + std::to_string(i), t,
                                      physical ? "access.badge_denied" : "ids.failed_login",
                                      "asset-" + std::to_string(rng.index(5)), {},
                                      physical ? SensorDomain::Physical : SensorDomain::Cyber));
    }
    std::unordered_map<std::string, Timestamp> event_time;
    for (const Event& e : f.events) event_time.emplace(e.id, e.occurred_at);
    std::size_t remaining = budget > n_events ? budget - n_events : 0;
    const std::size_t n_alerts = std::min(remaining, remaining / 2 + 1);
    for (std::size_t i = 0; i < n_alerts; ++i) {
        Alert a;
        const auto k = static_cast<std::size_t>(rng.between(1, 3));
        for (std::size_t j = 0; j < k; ++j) {
            const Event& e = f.events[rng.index(f.events.size())];
            if (std::find(a.event_ids.begin(), a.event_ids.end(), e.id) == a.event_ids.end()) a.event_ids.push_back(e.id);
            if (j == 0) {
                a.domain = e.domain;
                a.asset = e.asset;
            }
        }
        Timestamp latest = Timestamp::from_millis(0);
        for (const auto& id : a.event_ids) latest = std::max(latest, event_time.at(id));
        // Some alerts land exactly on day boundaries and on the gauge edge.
        const double u = rng.uniform();
        Timestamp raised = latest + Millis(rng.between(0, 3'600'000));
        if (u < 0.05) raised = raised.day_floor() + Millis(86'400'000);
        else if (u < 0.08) raised = raised.day_floor() + Millis(86'400'000 - 1);
        else if (u < 0.10) raised = now - Millis(86'400'000);
        else if (u < 0.12) raised = now - Millis(86'400'000 + 1);
        if (raised < latest) raised = latest;
        a.raised_at = raised;
        a.rule_id = "rule-" + std::to_string(rng.index(4));
        a.severity = kAllSeverities[rng.index(4)];
        a.detector = "det-" + std::to_string(rng.index(3));
        a.justification = "random";
        a.id = derive_id(a.raised_at, "alert" + std::to_string(i));
        f.alerts.push_back(std::move(a));
    }
    remaining -= n_alerts;
    if (f.alerts.empty()) return f;

    std::vector<std::size_t> order(f.alerts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const std::size_t n_incidents = std::min(order.size(), remaining / 3);
    for (std::size_t i = 0; i < n_incidents; ++i) {
        const Alert& a = f.alerts[order[i]];
        Incident inc;
        inc.alert_id = a.id;
        inc.classification = rng.uniform() < 0.4 ? Classification::Confirmed : Classification::Irrelevant;
        inc.classified_by = "op" + std::to_string(rng.index(3));
        inc.classified_at = a.raised_at + Millis(rng.between(1, 86'400'000));
        inc.id = derive_id(inc.classified_at, "incident|" + a.id);
        f.incidents.push_back(std::move(inc));
    }
    remaining -= n_incidents;

    std::int64_t tick = 0;
    for (std::size_t i = 0; i < remaining; ++i) {
        const Alert& a = f.alerts[rng.index(f.alerts.size())];
        MlScore s;
        s.alert_id = a.id;
        s.model_id = kModels[rng.index(3)];
        // Probabilities include the bucket edges 0, 0.1, ..., 1.
        s.probability = rng.uniform() < 0.15 ? static_cast<double>(rng.between(0, 10)) / 10.0 : rng.uniform();
        // A few share a fixed offset so one alert can get same-time scores.
        const bool tie = rng.uniform() < 0.1;
        s.scored_at = a.raised_at + Millis(tie ? 0 : ++tick);
        f.scores.push_back(std::move(s));
    }
    return f;
}

void load_fixture(store::Store& store, const StoreFixture& f)
{
    store.put_events(f.events);
    store.put_alerts(f.alerts);
    for (const Incident& i : f.incidents) store.put_incident(i);
    store.put_scores(f.scores);
}

}  // namespace invscope::testing
