#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "aggregation_oracle.hpp"
#include "invscope/codec.hpp"
#include "invscope/error.hpp"
#include "invscope/id.hpp"
#include "invscope/store.hpp"
#include "random_data.hpp"
#include "raw_log.hpp"
#include "temp_dir.hpp"

using namespace invscope;
using namespace invscope::store;
using testing::make_event;

namespace {

const Timestamp kNow = *Timestamp::parse("2024-05-20T12:00:00Z");

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidInput;
}

struct Fixture {
    testing::TempDir dir;
    Store store{dir.path()};
    int n = 0;

    Event event(Timestamp t, SensorDomain d = SensorDomain::Cyber)
    {
        Event e = make_event("src", "n" + std::to_string(n++), t, "ids.failed_login", "srv-1", {}, d);
        store.put_events(std::vector{e});
        return e;
    }

    Alert alert(Timestamp t, Severity s = Severity::Medium, SensorDomain d = SensorDomain::Cyber)
    {
        const Event e = event(t, d);
        Alert a;
        a.id = derive_id(t, "alert" + std::to_string(n++));
        a.rule_id = "r1";
        a.severity = s;
        a.domain = d;
        a.detector = "ids";
        a.asset = "srv-1";
        a.raised_at = t;
        a.event_ids = {e.id};
        a.justification = "because";
        store.put_alerts(std::vector{a});
        return a;
    }

    void score(const Alert& a, double p, const std::string& model = "m1", Millis after = Millis(1))
    {
        store.put_scores(std::vector{MlScore{a.id, p, model, a.raised_at + after}});
    }

    Incident classify(const Alert& a, Classification c = Classification::Confirmed)
    {
        Incident i{derive_id(a.raised_at, "incident|" + a.id), a.id, c, "op1", a.raised_at + Millis(5), std::nullopt};
        store.put_incident(i);
        return i;
    }
};

/// Every query result of a store, for whole-store comparisons.
json snapshot(const Store& s, Timestamp now)
{
    json j;
    for (const auto& e : s.events()) j["events"].push_back(to_json(e));
    for (const auto& a : s.alerts()) j["alerts"].push_back(to_json(a));
    for (const auto& i : s.incidents()) j["incidents"].push_back(to_json(i));
    for (const auto& x : s.scores()) j["scores"].push_back(to_json(x));
    const AlertFilter all;
    const auto h = s.alert_time_histogram(all, now);
    for (const auto& [start, count] : h.buckets) j["hist"].push_back({start.millis(), count});
    for (const auto& [sev, count] : s.severity_counts(all)) j["sev"].push_back(count);
    for (const auto& [dom, count] : s.domain_counts(all)) j["dom"].push_back(count);
    const auto p = s.probability_histogram(all);
    j["prob"] = {p.counts, p.scored, p.mean};
    j["gauge"] = s.alert_gauge(kDefaultGaugeWindow, 10, now).current;
    for (auto sort : {SortKey::RaisedAt, SortKey::Probability}) {
        for (const auto& x : s.list_alerts(all, sort, 0, kMaxPageSize).items) j["list"].push_back(x.id);
    }
    return j;
}

}  // namespace

TEST_SUITE("store")
{
    TEST_CASE("second incident for an alert is a conflict")
    {
        Fixture f;
        const Alert a = f.alert(kNow);
        f.classify(a);
        CHECK(code_of([&] { f.classify(a, Classification::Irrelevant); }) == ErrorCode::Conflict);
        CHECK(f.store.incidents().size() == 1);
        CHECK(f.store.find_alert(a.id)->status == AlertStatus::Closed);
    }

    TEST_CASE("dangling references are refused")
    {
        Fixture f;
        Incident i{derive_id(kNow, "x"), derive_id(kNow, "nope"), Classification::Confirmed, "op", kNow, std::nullopt};
        CHECK(code_of([&] { f.store.put_incident(i); }) == ErrorCode::Referential);
        CHECK(code_of([&] { f.store.put_scores(std::vector{MlScore{i.alert_id, 0.5, "m", kNow}}); }) ==
              ErrorCode::Referential);
        Alert a;
        a.id = derive_id(kNow, "a");
        a.rule_id = "r";
        a.raised_at = kNow;
        a.event_ids = {derive_id(kNow, "missing")};
        a.justification = "j";
        CHECK(code_of([&] { f.store.put_alerts(std::vector{a}); }) == ErrorCode::Referential);
    }

    TEST_CASE("five new and two duplicate events write five")
    {
        Fixture f;
        std::vector<Event> batch;
        for (int i = 0; i < 5; ++i) batch.push_back(make_event("s", "r" + std::to_string(i), kNow, "k", "a"));
        f.store.put_events(std::vector{batch[0], batch[1]});
        std::vector<Event> seven = batch;
        seven.push_back(make_event("s", "r5", kNow, "k", "a"));
        seven.push_back(make_event("s", "r6", kNow, "k", "a"));
        CHECK(f.store.put_events(seven) == 5);
        CHECK(f.store.event_count() == 7);
        // Same source and native ref under a different id is still a duplicate.
        Event again = batch[2];
        again.occurred_at = kNow + Millis(9);
        again.id = derive_id(again.occurred_at, "other");
        CHECK(f.store.put_events(std::vector{again}) == 0);
    }

    TEST_CASE("crash between append and index update, then reopen")
    {
        testing::TempDir dir;
        Rng rng(17);
        const auto fx = testing::random_store(rng, 400, kNow);
        REQUIRE(fx.incidents.size() >= 2);
        {
            Store s(dir.path());
            s.put_events(fx.events);
            s.put_alerts(fx.alerts);
            s.put_incident(fx.incidents[0]);
            s.set_fault_hook([](FaultPoint p, std::string_view) { return p == FaultPoint::AfterAppend; });
            CHECK(code_of([&] { s.put_incident(fx.incidents[1]); }) == ErrorCode::StoreUnavailable);
            CHECK_FALSE(s.available());
            CHECK(code_of([&] { s.put_scores(fx.scores); }) == ErrorCode::StoreUnavailable);
        }
        Store reopened(dir.path());

        // The durable incident survives; a store fed the same records
        // through the API answers every query the same way.
        testing::TempDir fresh_dir;
        Store fresh(fresh_dir.path());
        fresh.put_events(fx.events);
        fresh.put_alerts(fx.alerts);
        fresh.put_incident(fx.incidents[0]);
        fresh.put_incident(fx.incidents[1]);
        CHECK(snapshot(reopened, kNow) == snapshot(fresh, kNow));
    }

    TEST_CASE("property: any byte prefix of a log replays to its surviving records")
    {
        Rng rng(23);
        for (int round = 0; round < 12; ++round) {
            testing::TempDir dir;
            const auto fx = testing::random_store(rng, 120, kNow, 5);
            {
                Store s(dir.path());
                testing::load_fixture(s, fx);
            }
            for (const std::string log : {"events.log", "alerts.log", "incidents.log", "scores.log"}) {
                CAPTURE(log);
                testing::TempDir cut;
                std::filesystem::copy(dir.path(), cut.path(), std::filesystem::copy_options::overwrite_existing);
                const auto path = cut / log;
                if (!std::filesystem::exists(path)) continue;
                const auto size = static_cast<std::int64_t>(std::filesystem::file_size(path));
                std::filesystem::resize_file(path, static_cast<std::uintmax_t>(rng.between(0, size)));
                const auto kept = testing::read_raw_log(path);

                Store torn(cut.path());
                if (log == "events.log") {
                    std::vector<Event> expected;
                    for (const auto& r : kept) expected.push_back(event_from_json(r.at("data")));
                    CHECK(torn.events() == expected);
                    // The torn tail is gone: a new record follows the last good one.
                    torn.put_events(std::vector{make_event("late", "x", kNow, "k", "a")});
                    CHECK(testing::read_raw_log(path).size() == kept.size() + 1);
                } else if (log == "alerts.log") {
                    std::vector<std::string> expected;
                    for (const auto& r : kept) expected.push_back(r.at("data").at("id").get<std::string>());
                    std::vector<std::string> actual;
                    for (const auto& a : torn.alerts()) actual.push_back(a.id);
                    CHECK(actual == expected);
                } else if (log == "incidents.log") {
                    std::vector<Incident> expected;
                    for (const auto& r : kept) expected.push_back(incident_from_json(r.at("data")));
                    CHECK(torn.incidents() == expected);
                } else {
                    std::vector<MlScore> expected;
                    for (const auto& r : kept) expected.push_back(score_from_json(r.at("data")));
                    CHECK(torn.scores() == expected);
                }
            }
        }
    }

    TEST_CASE("reopening rebuilds identical query results")
    {
        Rng rng(29);
        testing::TempDir dir;
        const auto fx = testing::random_store(rng, 1500, kNow);
        json before;
        {
            Store s(dir.path());
            testing::load_fixture(s, fx);
            s.set_watermark("ep", {"a.log", 10});
            before = snapshot(s, kNow);
        }
        Store s(dir.path());
        CHECK(snapshot(s, kNow) == before);
        CHECK(s.meta().watermarks.at("ep") == Watermark{"a.log", 10});
    }

    TEST_CASE("empty store histogram has 60 zero buckets")
    {
        Fixture f;
        const auto h = f.store.alert_time_histogram({}, kNow);
        CHECK(h.buckets.size() == 60);
        CHECK(h.total() == 0);
        CHECK(h.to == kNow.day_floor() + Millis(86'400'000));
        for (std::size_t i = 1; i < h.buckets.size(); ++i)
            CHECK(h.buckets[i].first - h.buckets[i - 1].first == Millis(86'400'000));
    }

    TEST_CASE("severity filter on one day")
    {
        Fixture f;
        const auto day = kNow.day_floor() - Millis(3 * 86'400'000LL);
        f.alert(day + Millis(1000), Severity::High);
        f.alert(day + Millis(2000), Severity::High);
        f.alert(day + Millis(3000), Severity::Low);
        AlertFilter high;
        high.severity = Severity::High;
        const auto h = f.store.alert_time_histogram(high, kNow);
        for (const auto& [start, count] : h.buckets) CHECK(count == (start == day ? 2u : 0u));
    }

    TEST_CASE("day boundary splits buckets")
    {
        Fixture f;
        const auto midnight = kNow.day_floor() - Millis(86'400'000);
        f.alert(midnight - Millis(1));
        f.alert(midnight);
        const auto h = f.store.alert_time_histogram({}, kNow);
        std::size_t nonzero = 0;
        for (const auto& [start, count] : h.buckets) nonzero += count == 1;
        CHECK(nonzero == 2);
    }

    TEST_CASE("inverted range is invalid input")
    {
        Fixture f;
        AlertFilter bad;
        bad.from = kNow;
        bad.to = kNow - Millis(1);
        CHECK(code_of([&] { f.store.alert_time_histogram(bad, kNow); }) == ErrorCode::InvalidInput);
        CHECK(code_of([&] { f.store.severity_counts(bad); }) == ErrorCode::InvalidInput);
    }

    TEST_CASE("severity and domain counts")
    {
        Fixture f;
        for (Severity s : kAllSeverities) f.alert(kNow - Millis(10), s);
        for (const auto& [s, c] : f.store.severity_counts({})) CHECK(c == 1);

        f.alert(kNow - Millis(5), Severity::High, SensorDomain::Physical);
        AlertFilter phys;
        phys.domain = SensorDomain::Physical;
        const auto c = f.store.severity_counts(phys);
        CHECK(c.at(Severity::High) == 1);
        CHECK(c.at(Severity::Low) == 0);
        CHECK(f.store.domain_counts({}).at(SensorDomain::Cyber) == 4);

        AlertFilter empty;
        empty.from = kNow;
        empty.to = kNow;
        for (const auto& [s, n] : f.store.severity_counts(empty)) CHECK(n == 0);
    }

    TEST_CASE("probability histogram buckets and mean")
    {
        Fixture f;
        for (double p : {0.1, 0.2, 0.3}) f.score(f.alert(kNow), p);
        f.alert(kNow);  // unscored
        auto h = f.store.probability_histogram({});
        CHECK(h.scored == 3);
        CHECK(h.mean == doctest::Approx(0.2));
        CHECK(h.counts == std::vector<std::uint64_t>{0, 1, 1, 1, 0, 0, 0, 0, 0, 0});

        f.score(f.alert(kNow), 1.0);
        h = f.store.probability_histogram({});
        CHECK(h.counts[9] == 1);
    }

    TEST_CASE("current score is the newest and ties go to the smaller model id")
    {
        Fixture f;
        const Alert a = f.alert(kNow);
        f.score(a, 0.2, "m-b", Millis(10));
        f.score(a, 0.7, "m-a", Millis(5));
        CHECK(f.store.current_score(a.id)->probability == 0.2);
        f.score(a, 0.9, "m-c", Millis(10));
        CHECK(f.store.current_score(a.id)->model_id == "m-b");
        // A second score from the same model is ignored.
        f.score(a, 0.99, "m-b", Millis(50));
        CHECK(f.store.current_score(a.id)->probability == 0.2);
    }

    TEST_CASE("gauge")
    {
        Fixture f;
        const auto g0 = f.store.alert_gauge(kDefaultGaugeWindow, kDefaultGaugeThreshold, kNow);
        CHECK(g0 == Gauge{0, 10'000, false});

        for (int i = 0; i < 5; ++i) f.alert(kNow - Millis(1000 * i));
        CHECK(f.store.alert_gauge(kDefaultGaugeWindow, 5, kNow).warn);
        CHECK_FALSE(f.store.alert_gauge(kDefaultGaugeWindow, 6, kNow).warn);

        f.alert(kNow - kDefaultGaugeWindow - Millis(1));
        f.alert(kNow - kDefaultGaugeWindow);
        CHECK(f.store.alert_gauge(kDefaultGaugeWindow, 5, kNow).current == 6);
        CHECK(code_of([&] { f.store.alert_gauge(Millis(0), 5, kNow); }) == ErrorCode::InvalidInput);
    }

    TEST_CASE("probability sort puts unscored alerts last")
    {
        Fixture f;
        const Alert none = f.alert(kNow);
        const Alert mid = f.alert(kNow);
        const Alert high = f.alert(kNow);
        f.score(mid, 0.5);
        f.score(high, 0.9);
        const auto page = f.store.list_alerts({}, SortKey::Probability, 0, 10);
        REQUIRE(page.items.size() == 3);
        CHECK(page.items[0].id == high.id);
        CHECK(page.items[1].id == mid.id);
        CHECK(page.items[2].id == none.id);
        CHECK_FALSE(page.items[2].probability);
    }

    TEST_CASE("classification filter and pagination bounds")
    {
        Fixture f;
        const Alert a = f.alert(kNow);
        const Alert b = f.alert(kNow);
        f.alert(kNow);
        f.classify(a);
        f.classify(b, Classification::Irrelevant);
        AlertFilter confirmed;
        confirmed.classification = Classification::Confirmed;
        const auto page = f.store.list_alerts(confirmed, SortKey::RaisedAt, 0, 10);
        REQUIRE(page.items.size() == 1);
        CHECK(page.items[0].id == a.id);
        CHECK(page.items[0].classification == Classification::Confirmed);

        const auto beyond = f.store.list_alerts({}, SortKey::RaisedAt, 10, 10);
        CHECK(beyond.items.empty());
        CHECK(beyond.total == 3);
        CHECK(code_of([&] { f.store.list_alerts({}, SortKey::RaisedAt, 0, 0); }) == ErrorCode::InvalidInput);
        CHECK(code_of([&] { f.store.list_alerts({}, SortKey::RaisedAt, 0, 501); }) == ErrorCode::InvalidInput);
    }

    TEST_CASE("alert detail")
    {
        Fixture f;
        const Alert a = f.alert(kNow);
        f.score(a, 0.4);
        f.classify(a);
        const auto d = f.store.get_alert_detail(a.id);
        CHECK(d.alert.id == a.id);
        CHECK(d.events.size() == 1);
        CHECK(d.score->probability == 0.4);
        CHECK(d.incident->alert_id == a.id);

        const Alert b = f.alert(kNow);
        CHECK_FALSE(f.store.get_alert_detail(b.id).score);
        CHECK(code_of([&] { f.store.get_alert_detail("nope"); }) == ErrorCode::NotFound);
    }

    TEST_CASE("property: concatenated pages equal the unpaginated list")
    {
        Rng rng(41);
        for (int round = 0; round < 10; ++round) {
            Fixture f;
            const auto fx = testing::random_store(rng, 800, kNow);
            testing::load_fixture(f.store, fx);
            for (auto sort : {SortKey::RaisedAt, SortKey::Probability}) {
                const auto full = f.store.list_alerts({}, sort, 0, kMaxPageSize);
                const auto limit = static_cast<std::size_t>(rng.between(1, 37));
                std::vector<std::string> paged;
                for (std::size_t off = 0; off < full.total; off += limit) {
                    const auto page = f.store.list_alerts({}, sort, off, limit);
                    CHECK(page.total == full.total);
                    for (const auto& s : page.items) paged.push_back(s.id);
                }
                std::vector<std::string> ids;
                for (const auto& s : full.items) ids.push_back(s.id);
                if (full.total <= kMaxPageSize) CHECK(paged == ids);
                CHECK(paged == testing::AggregationOracle(fx).list_ids({}, sort));
            }
        }
    }

    TEST_CASE("aggregations agree with full scans on random stores")
    {
        Rng rng(43);
        for (int round = 0; round < 5; ++round) {
            Fixture f;
            const auto fx = testing::random_store(rng, 1000, kNow);
            testing::load_fixture(f.store, fx);
            const testing::AggregationOracle oracle(fx);
            AlertFilter filter;
            if (round % 2) filter.domain = SensorDomain::Physical;
            CHECK(f.store.alert_time_histogram(filter, kNow) == oracle.time_histogram(filter, kNow));
            CHECK(f.store.severity_counts(filter) == oracle.severity_counts(filter));
            CHECK(f.store.domain_counts(filter) == oracle.domain_counts(filter));
            CHECK(f.store.probability_histogram(filter) == oracle.probability_histogram(filter));
            CHECK(f.store.alert_gauge(kDefaultGaugeWindow, 20, kNow) == oracle.gauge(kDefaultGaugeWindow, 20, kNow));
        }
    }

    TEST_CASE("watermarks never move backwards")
    {
        Fixture f;
        f.store.set_watermark("ep", {"b.log", 5});
        CHECK(code_of([&] { f.store.set_watermark("ep", {"b.log", 4}); }) == ErrorCode::Precondition);
        CHECK(code_of([&] { f.store.set_watermark("ep", {"a.log", 100}); }) == ErrorCode::Precondition);
        f.store.set_watermarks({{"ep", {"c.log", 0}}, {"other", {"x", 1}}});
        CHECK(f.store.meta().watermarks.at("ep") == Watermark{"c.log", 0});
    }
}
