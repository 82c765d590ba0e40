#include "invscope/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "invscope/correlation/engine.hpp"
#include "invscope/error.hpp"
#include "invscope/id.hpp"
#include "invscope/rng.hpp"
#include "invscope/sync.hpp"

namespace invscope::scenario {

namespace fs = std::filesystem;

namespace {

constexpr int kZones = 8;
constexpr int kServers = 16;
constexpr int kWorkstations = 64;
constexpr int kUsers = 120;

const std::set<std::string, std::less<>> kBackgroundKinds{
    "ids.failed_login", "ids.login_success", "ids.port_probe", "access.badge_ok",
    "access.badge_denied", "access.door_held", "access.door_forced",
};
const std::set<std::string, std::less<>> kDecoys{"benign_lockout", "scanner_sweep", "badge_malfunction"};

using Range = std::pair<std::int64_t, std::int64_t>;
using Params = std::map<std::string, Range, std::less<>>;

const std::map<std::string, Params, std::less<>>& template_defaults()
{
    static const std::map<std::string, Params, std::less<>> defaults{
        {"brute_force", {{"attempts", {6, 10}}, {"gap_seconds", {2, 5}}}},
        {"physical_breach", {{"denials", {3, 5}}, {"gap_seconds", {8, 25}}, {"forced_delay_seconds", {20, 90}}}},
        {"cyber_physical",
         {{"denials", {3, 4}},
          {"gap_seconds", {8, 25}},
          {"login_delay_seconds", {40, 200}},
          {"attempts", {5, 7}},
          {"login_gap_seconds", {2, 5}}}},
    };
    return defaults;
}

std::string zone_name(int z) { return std::string("zone-") + static_cast<char>('a' + z); }

std::string padded(std::int64_t n, int width)
{
    std::string s = std::to_string(n);
    return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

struct Host {
    std::string name;
    int zone = 0;
};

struct Draft {
    Event event;
    /// Index into the ground-truth list, or -1 for background.
    int scenario = -1;
};

class Builder {
public:
    explicit Builder(const ScenarioSpec& spec)
        : spec_(spec),
          rng_(spec.seed),
          end_(spec.start + Millis(static_cast<std::int64_t>(spec.duration_hours * 3600.0 * 1000.0)))
    {
        for (int i = 0; i < kServers; ++i) servers_.push_back({"srv-" + padded(i + 1, 2), i % kZones});
        for (int i = 0; i < kWorkstations; ++i) workstations_.push_back({"ws-" + padded(i + 1, 3), (i * 5) % kZones});
    }

    Generated run()
    {
        for (const auto& [kind, rate] : spec_.background) background(kind, rate);
        for (const auto& [decoy, rate] : spec_.decoys) decoys(decoy, rate);
        for (const auto& inj : spec_.injections) {
            for (int k = 0; k < inj.count; ++k) inject(inj, merged_params(inj));
        }
        return finish();
    }

private:
    // Placement helpers. Scenario bursts start early enough to finish
    // inside the spec duration.
    Timestamp uniform_time(Millis reserve = Millis(0))
    {
        const auto span = std::max<std::int64_t>(1, (end_ - spec_.start - reserve).count());
        return spec_.start + Millis(static_cast<std::int64_t>(rng_.index(static_cast<std::uint64_t>(span))));
    }

    /// Biased to 08:00-18:00 UTC, when benign mistakes happen.
    Timestamp office_time(Millis reserve)
    {
        for (int attempt = 0; attempt < 50; ++attempt) {
            const Timestamp t = uniform_time(reserve);
            const double h = t.hour_of_day();
            if ((h >= 8.0 && h < 18.0) || rng_.uniform() < 0.1) return t;
        }
        return uniform_time(reserve);
    }

    Millis seconds_between(Range r)
    {
        // Millisecond jitter inside the integer-second range.
        const double s = rng_.uniform(static_cast<double>(r.first), static_cast<double>(r.second));
        return Millis(static_cast<std::int64_t>(s * 1000.0));
    }

    std::string internal_ip()
    {
        const auto subnet = rng_.between(1, 40);
        const auto host = rng_.between(2, 254);
        return "10.0." + std::to_string(subnet) + "." + std::to_string(host);
    }
    std::string external_ip() { return "203.0.113." + std::to_string(rng_.between(1, 254)); }
    std::string user() { return "user" + padded(rng_.between(1, kUsers), 3); }
    std::string badge() { return "B" + std::to_string(rng_.between(10001, 10400)); }
    const Host& any_host()
    {
        const auto i = rng_.index(kServers + kWorkstations);
        return i < kServers ? servers_[i] : workstations_[i - kServers];
    }
    const Host& server() { return servers_[rng_.index(kServers)]; }
    const Host& workstation() { return workstations_[rng_.index(kWorkstations)]; }

    void ids(Timestamp t, std::string_view sig, const Host& host, const std::string& src_ip, Attributes extra,
             int scenario)
    {
        Event e;
        e.source_id = "ids-sensor-" + std::to_string(host.zone % 4 + 1);
        e.domain = SensorDomain::Cyber;
        e.occurred_at = t;
        e.kind = "ids." + std::string(sig);
        e.asset = host.name;
        e.attributes = std::move(extra);
        e.attributes["src_ip"] = src_ip;
        e.attributes["zone"] = zone_name(host.zone);
        drafts_.push_back({std::move(e), scenario});
    }

    void access(Timestamp t, std::string_view action, int zone, const std::string& badge_id, int scenario)
    {
        Event e;
        e.source_id = "reader-" + zone_name(zone) + "-" + std::to_string(rng_.between(1, 2));
        e.domain = SensorDomain::Physical;
        e.occurred_at = t;
        e.kind = "access." + std::string(action);
        e.asset = zone_name(zone);
        e.attributes["badge_id"] = badge_id;
        drafts_.push_back({std::move(e), scenario});
    }

    void background(const std::string& kind, double rate)
    {
        if (!kBackgroundKinds.contains(kind)) throw Error(ErrorCode::InvalidInput, "unknown background kind " + kind);
        if (!(rate >= 0.0) || !std::isfinite(rate)) throw Error(ErrorCode::InvalidInput, "bad rate for " + kind);
        if (rate == 0.0) return;
        // Poisson process: exponential inter-arrival times.
        const double mean_gap_ms = 3600.0 * 1000.0 / rate;
        Timestamp t = spec_.start;
        while (true) {
            t = t + Millis(static_cast<std::int64_t>(-std::log(1.0 - rng_.uniform()) * mean_gap_ms) + 1);
            if (t >= end_) break;
            // Draws are sequenced explicitly; argument evaluation order is
            // unspecified.
            if (kind == "ids.port_probe") {
                const Host& host = any_host();
                const std::string ip = rng_.uniform() < 0.5 ? internal_ip() : external_ip();
                const auto port = rng_.between(1, 65535);
                ids(t, "port_probe", host, ip, {{"dst_port", port}}, -1);
            } else if (kind.starts_with("ids.")) {
                const Host& host = any_host();
                const std::string ip = internal_ip();
                ids(t, kind.substr(4), host, ip, {{"user", user()}}, -1);
            } else {
                const int zone = static_cast<int>(rng_.index(kZones));
                access(t, kind.substr(7), zone, badge(), -1);
            }
        }
    }

    void decoys(const std::string& decoy, double rate)
    {
        if (!kDecoys.contains(decoy)) throw Error(ErrorCode::InvalidInput, "unknown decoy " + decoy);
        if (!(rate >= 0.0) || !std::isfinite(rate)) throw Error(ErrorCode::InvalidInput, "bad rate for " + decoy);
        const auto count = static_cast<std::int64_t>(std::llround(rate * spec_.duration_hours));
        for (std::int64_t k = 0; k < count; ++k) {
            if (decoy == "benign_lockout") {
                // A user mistyping a password a few times, slowly.
                const Host& host = workstation();
                const std::string ip = internal_ip();
                const std::string who = user();
                Timestamp t = office_time(Millis(15 * 60 * 1000));
                const auto attempts = rng_.between(5, 7);
                for (std::int64_t a = 0; a < attempts; ++a) {
                    ids(t, "failed_login", host, ip, {{"user", who}}, -1);
                    t = t + seconds_between({6, 11});
                }
                ids(t, "login_success", host, ip, {{"user", who}}, -1);
            } else if (decoy == "scanner_sweep") {
                // The in-house vulnerability scanner.
                const Host& host = server();
                Timestamp t = uniform_time(Millis(15 * 60 * 1000));
                const auto probes = rng_.between(25, 40);
                for (std::int64_t p = 0; p < probes; ++p) {
                    const auto port = rng_.between(1, 1024);
                    ids(t, "port_probe", host, "10.0.250.10", {{"dst_port", port}}, -1);
                    t = t + Millis(rng_.between(200, 900));
                }
            } else {
                // A worn badge failing at a reader before it finally works.
                const int zone = static_cast<int>(rng_.index(kZones));
                const std::string id = badge();
                Timestamp t = office_time(Millis(15 * 60 * 1000));
                const auto tries = rng_.between(3, 4);
                for (std::int64_t a = 0; a < tries; ++a) {
                    access(t, "badge_denied", zone, id, -1);
                    t = t + seconds_between({15, 35});
                }
                access(t, "badge_ok", zone, id, -1);
            }
        }
    }

    Params merged_params(const Injection& inj) const
    {
        const auto def = template_defaults().find(inj.template_id);
        if (def == template_defaults().end()) {
            throw Error(ErrorCode::InvalidInput, "unknown template_id " + inj.template_id);
        }
        Params p = def->second;
        if (!inj.params.is_object()) throw Error(ErrorCode::InvalidInput, "params must be an object");
        for (const auto& [key, value] : inj.params.items()) {
            const auto it = p.find(key);
            if (it == p.end()) throw Error(ErrorCode::InvalidInput, "unknown parameter " + key + " for " + inj.template_id);
            if (!value.is_array() || value.size() != 2 || !value[0].is_number_integer() ||
                !value[1].is_number_integer() || value[0].get<std::int64_t>() < 0 ||
                value[0].get<std::int64_t>() > value[1].get<std::int64_t>()) {
                throw Error(ErrorCode::InvalidInput, "parameter " + key + " must be [lo, hi] with 0 <= lo <= hi");
            }
            it->second = {value[0].get<std::int64_t>(), value[1].get<std::int64_t>()};
        }
        return p;
    }

    void inject(const Injection& inj, const Params& p)
    {
        const int id = static_cast<int>(truth_.size());
        GroundTruth g;
        g.scenario_id = "scn-" + padded(id + 1, 3);
        g.template_id = inj.template_id;
        truth_.push_back(g);
        auto count = [&](const char* key) { return rng_.between(p.at(key).first, p.at(key).second); };

        Timestamp t = uniform_time(Millis(30 * 60 * 1000));
        if (inj.template_id == "brute_force") {
            const Host& host = server();
            const std::string ip = external_ip();
            const std::string who = user();
            const auto attempts = count("attempts");
            for (std::int64_t a = 0; a < attempts; ++a) {
                ids(t, "failed_login", host, ip, {{"user", who}}, id);
                t = t + seconds_between(p.at("gap_seconds"));
            }
            ids(t, "login_success", host, ip, {{"user", who}}, id);
        } else if (inj.template_id == "physical_breach") {
            const int zone = static_cast<int>(rng_.index(kZones));
            const std::string id_badge = badge();
            const auto denials = count("denials");
            for (std::int64_t a = 0; a < denials; ++a) {
                access(t, "badge_denied", zone, id_badge, id);
                t = t + seconds_between(p.at("gap_seconds"));
            }
            t = t + seconds_between(p.at("forced_delay_seconds"));
            access(t, "door_forced", zone, id_badge, id);
        } else {
            const Host& host = server();
            const std::string id_badge = badge();
            const auto denials = count("denials");
            for (std::int64_t a = 0; a < denials; ++a) {
                access(t, "badge_denied", host.zone, id_badge, id);
                t = t + seconds_between(p.at("gap_seconds"));
            }
            t = t + seconds_between(p.at("login_delay_seconds"));
            const std::string ip = internal_ip();
            const std::string who = user();
            const auto attempts = count("attempts");
            for (std::int64_t a = 0; a < attempts; ++a) {
                ids(t, "failed_login", host, ip, {{"user", who}}, id);
                t = t + seconds_between(p.at("login_gap_seconds"));
            }
        }
    }

    Generated finish()
    {
        std::stable_sort(drafts_.begin(), drafts_.end(),
                         [](const Draft& a, const Draft& b) { return a.event.occurred_at < b.event.occurred_at; });
        Generated out;
        out.truth = std::move(truth_);
        std::vector<bool> seen(out.truth.size(), false);
        std::int64_t seq = 0;
        for (auto& d : drafts_) {
            Event& e = d.event;
            e.native_ref = "n" + padded(++seq, 7);
            e.id = derive_id(e.occurred_at, dedup_key(e.source_id, e.native_ref));
            if (d.scenario >= 0) {
                auto& g = out.truth[static_cast<std::size_t>(d.scenario)];
                if (!seen[static_cast<std::size_t>(d.scenario)]) g.started_at = e.occurred_at;
                seen[static_cast<std::size_t>(d.scenario)] = true;
                g.ended_at = e.occurred_at;
                g.native_refs.push_back(e.native_ref);
            }
            out.events.push_back(std::move(e));
        }
        return out;
    }

    const ScenarioSpec& spec_;
    Rng rng_;
    Timestamp end_;
    std::vector<Host> servers_;
    std::vector<Host> workstations_;
    std::vector<Draft> drafts_;
    std::vector<GroundTruth> truth_;
};

}  // namespace

ScenarioSpec spec_from_json(const json& j)
{
    try {
        ScenarioSpec s;
        s.seed = j.value("seed", s.seed);
        s.duration_hours = j.value("duration_hours", s.duration_hours);
        if (j.contains("start")) {
            const auto t = Timestamp::parse(j.at("start").get<std::string>());
            if (!t) throw Error(ErrorCode::InvalidInput, "scenario start is not a timestamp");
            s.start = *t;
        }
        s.background = j.value("background", std::map<std::string, double>{});
        s.decoys = j.value("decoys", std::map<std::string, double>{});
        for (const auto& inj : j.value("injections", json::array())) {
            Injection i;
            i.template_id = inj.at("template_id").get<std::string>();
            i.count = inj.at("count").get<int>();
            if (i.count < 0) throw Error(ErrorCode::InvalidInput, "injection count must be >= 0");
            i.params = inj.value("params", json::object());
            s.injections.push_back(std::move(i));
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, std::string("malformed scenario spec: ") + e.what());
    }
}

json to_json(const ScenarioSpec& s)
{
    json injections = json::array();
    for (const auto& i : s.injections) {
        injections.push_back({{"template_id", i.template_id}, {"count", i.count}, {"params", i.params}});
    }
    return json{{"seed", s.seed},
                {"duration_hours", s.duration_hours},
                {"start", s.start.to_string()},
                {"background", s.background},
                {"decoys", s.decoys},
                {"injections", injections}};
}

ScenarioSpec benchmark_spec()
{
    ScenarioSpec s;
    s.seed = 42;
    s.duration_hours = 72;
    s.background = {
        {"ids.failed_login", 30.0}, {"ids.login_success", 60.0}, {"ids.port_probe", 20.0},
        {"access.badge_ok", 80.0},  {"access.badge_denied", 4.0}, {"access.door_held", 0.4},
        {"access.door_forced", 0.02},
    };
    s.decoys = {{"benign_lockout", 0.5}, {"scanner_sweep", 0.15}, {"badge_malfunction", 0.3}};
    for (const char* t : {"brute_force", "physical_breach", "cyber_physical"}) s.injections.push_back({t, 10, json::object()});
    return s;
}

json to_json(const GroundTruth& g)
{
    return json{{"scenario_id", g.scenario_id},
                {"template_id", g.template_id},
                {"native_refs", g.native_refs},
                {"started_at", g.started_at.to_string()},
                {"ended_at", g.ended_at.to_string()}};
}

GroundTruth ground_truth_from_json(const json& j)
{
    try {
        GroundTruth g;
        g.scenario_id = j.at("scenario_id").get<std::string>();
        g.template_id = j.at("template_id").get<std::string>();
        g.native_refs = j.at("native_refs").get<std::vector<std::string>>();
        const auto from = Timestamp::parse(j.at("started_at").get<std::string>());
        const auto to = Timestamp::parse(j.at("ended_at").get<std::string>());
        if (!from || !to) throw Error(ErrorCode::InvalidInput, "ground truth has a bad timestamp");
        g.started_at = *from;
        g.ended_at = *to;
        return g;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, std::string("malformed ground truth record: ") + e.what());
    }
}

Generated generate(const ScenarioSpec& spec)
{
    if (!(spec.duration_hours >= 1.0) || !std::isfinite(spec.duration_hours)) {
        throw Error(ErrorCode::InvalidInput, "duration_hours must be >= 1");
    }
    return Builder(spec).run();
}

std::vector<Incident> label_alerts(std::span<const Alert> alerts, std::span<const Event> events,
                                   std::span<const GroundTruth> truth)
{
    std::unordered_map<std::string, std::size_t> scenario_of_ref;
    for (std::size_t s = 0; s < truth.size(); ++s) {
        for (const auto& ref : truth[s].native_refs) scenario_of_ref.emplace(ref, s);
    }
    std::unordered_map<std::string, const Event*> by_id;
    for (const Event& e : events) by_id.emplace(e.id, &e);

    std::vector<Incident> out;
    out.reserve(alerts.size());
    for (const Alert& a : alerts) {
        std::map<std::size_t, std::size_t> hits;
        for (const auto& eid : a.event_ids) {
            const auto e = by_id.find(eid);
            if (e == by_id.end()) continue;
            const auto s = scenario_of_ref.find(e->second->native_ref);
            if (s != scenario_of_ref.end()) ++hits[s->second];
        }
        std::size_t best = 0;
        for (const auto& [s, n] : hits) best = std::max(best, n);
        const bool confirmed = !a.event_ids.empty() &&
                               static_cast<double>(best) >= kConfirmOverlap * static_cast<double>(a.event_ids.size());

        Incident i;
        i.alert_id = a.id;
        i.classification = confirmed ? Classification::Confirmed : Classification::Irrelevant;
        i.classified_by = std::string(kLabeler);
        i.classified_at = a.raised_at + Millis(30 * 60 * 1000);
        i.id = derive_id(i.classified_at, "incident|" + a.id);
        out.push_back(std::move(i));
    }
    return out;
}

OutputSummary write_outputs(const Generated& g, std::span<const correlation::Rule> rules, const fs::path& out_dir)
{
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::InvalidInput, "cannot create " + out_dir.string() + ": " + ec.message());

    auto open = [&](const char* name) {
        std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + (out_dir / name).string());
        return out;
    };

    OutputSummary summary;
    {
        auto out = open("events.jsonl");
        for (const auto& e : g.events) out << encode_line(e) << '\n';
        summary.events = g.events.size();
    }
    {
        auto out = open("ground_truth.jsonl");
        for (const auto& t : g.truth) out << to_json(t).dump() << '\n';
        summary.scenarios = g.truth.size();
    }
    const auto alerts = correlation::evaluate_stream(g.events, rules);
    const auto labels = label_alerts(alerts, g.events, g.truth);
    {
        auto out = open("classifications.jsonl");
        for (const auto& i : labels) {
            out << sync::classification_record(i).dump() << '\n';
            if (i.classification == Classification::Confirmed) ++summary.confirmed;
        }
    }
    summary.alerts = alerts.size();
    return summary;
}

std::vector<GroundTruth> read_ground_truth(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot read " + path.string());
    std::vector<GroundTruth> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::InvalidInput, "ground truth line is not JSON");
        out.push_back(ground_truth_from_json(j));
    }
    return out;
}

}  // namespace invscope::scenario
