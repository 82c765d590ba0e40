#include <doctest.h>

#include <thread>

#include "aggregation_oracle.hpp"
#include "invscope/api.hpp"
#include "invscope/error.hpp"
#include "invscope/id.hpp"
#include "random_data.hpp"
#include "temp_dir.hpp"

// After the Eigen users: <resolv.h> defines a `_res` macro.
#include <httplib.h>

using namespace invscope;
using namespace invscope::api;
using namespace std::chrono_literals;

namespace {

const Timestamp kNow = *Timestamp::parse("2024-06-30T12:00:00Z");

struct Rig {
    testing::TempDir dir;
    store::Store store{dir / "store"};
    StaticTokens auth{{{"tok-alice", "alice"}, {"tok-bob", "bob"}}};
    Settings settings;
    bool busy = false;
    ApiHooks hooks{
        [this]() -> std::optional<sync::SyncReport> {
            if (busy) return std::nullopt;
            sync::SyncReport r;
            r.started_at = r.finished_at = kNow;
            return r;
        },
        [this] { return settings; },
        [this](const json& patch) { return settings = merge_settings(settings, patch); },
        [] { return json{{"running", true}}; },
        [] { return kNow; },
    };
    ApiHandler handler{store, auth, hooks};

    ApiResponse call(std::string method, std::string path, std::map<std::string, std::string> query = {},
                     std::string body = {}, std::optional<std::string> auth_header = "Bearer tok-alice")
    {
        return handler.handle(ApiRequest{std::move(method), std::move(path), std::move(query), std::move(auth_header),
                                         std::move(body)});
    }

    std::string add_alert(Timestamp t, std::string ref)
    {
        const auto e = testing::make_event("ids-1", ref, t, "ids.failed_login", "srv-1");
        store.put_events(std::vector<Event>{e});
        Alert a;
        a.id = derive_id(t, "alert|" + ref);
        a.rule_id = "r";
        a.raised_at = t;
        a.event_ids = {e.id};
        a.justification = "test";
        store.put_alerts(std::vector<Alert>{a});
        return a.id;
    }
};

}  // namespace

TEST_SUITE("api")
{
    TEST_CASE("status matrix")
    {
        Rig rig;
        const auto id = rig.add_alert(kNow - 1h, "1");

        CHECK(rig.call("GET", "/api/health", {}, {}, std::nullopt).status == 200);
        CHECK(rig.call("GET", "/api/alerts", {}, {}, std::nullopt).status == 401);
        CHECK(rig.call("GET", "/api/alerts", {}, {}, "Bearer wrong").status == 401);
        CHECK(rig.call("GET", "/api/alerts", {}, {}, "tok-alice").status == 401);
        CHECK(rig.call("GET", "/api/alerts").status == 200);
        CHECK(rig.call("GET", "/api/dashboards/alerts").status == 200);
        CHECK(rig.call("GET", "/api/dashboards/incidents").status == 200);
        CHECK(rig.call("GET", "/api/alerts/" + id).status == 200);
        CHECK(rig.call("GET", "/api/alerts/" + derive_id(kNow, "none")).status == 404);
        CHECK(rig.call("GET", "/api/nowhere").status == 404);
        CHECK(rig.call("DELETE", "/api/alerts").status == 404);

        CHECK(rig.call("GET", "/api/alerts", {{"limit", "0"}}).status == 400);
        CHECK(rig.call("GET", "/api/alerts", {{"limit", "501"}}).status == 400);
        CHECK(rig.call("GET", "/api/alerts", {{"limit", "ten"}}).status == 400);
        CHECK(rig.call("GET", "/api/alerts", {{"severity", "extreme"}}).status == 400);
        CHECK(rig.call("GET", "/api/alerts", {{"min_probability", "1.5"}}).status == 400);
        CHECK(rig.call("GET", "/api/dashboards/alerts", {{"from", "2024-06-02T00:00:00Z"}, {"to", "2024-06-01T00:00:00Z"}})
                  .status == 400);
        CHECK(rig.call("GET", "/api/dashboards/alerts", {{"from", "yesterday"}}).status == 400);

        const std::string path = "/api/alerts/" + id + "/classification";
        CHECK(rig.call("POST", path, {}, "not json").status == 400);
        CHECK(rig.call("POST", path, {}, R"({"classification":"maybe"})").status == 400);
        CHECK(rig.call("POST", path, {}, R"({"note":"x"})").status == 400);
        CHECK(rig.call("POST", "/api/alerts/" + derive_id(kNow, "none") + "/classification", {},
                       R"({"classification":"confirmed"})")
                  .status == 404);
        const auto ok = rig.call("POST", path, {}, R"({"classification":"confirmed","note":"real"})");
        CHECK(ok.status == 200);
        CHECK(ok.body.at("classified_by") == "alice");
        CHECK(ok.body.at("classified_at") == kNow.to_string());
        const auto again = rig.call("POST", path, {}, R"({"classification":"irrelevant"})", "Bearer tok-bob");
        CHECK(again.status == 409);
        CHECK(again.body.at("error_code") == "conflict");
        CHECK(rig.store.incident_for(id)->classified_by == "alice");

        CHECK(rig.call("POST", "/api/sync").status == 200);
        rig.busy = true;
        CHECK(rig.call("POST", "/api/sync").status == 409);

        CHECK(rig.call("GET", "/api/settings").status == 200);
        const auto put = rig.call("PUT", "/api/settings", {}, R"({"gauge_threshold":5})");
        CHECK(put.status == 200);
        CHECK(put.body.at("gauge_threshold") == 5);
        CHECK(rig.call("PUT", "/api/settings", {}, R"({"interval_seconds":0})").status == 400);
        CHECK(rig.call("PUT", "/api/settings", {}, R"({"colour":"red"})").status == 400);
        CHECK(rig.call("GET", "/api/dashboards/alerts").body["gauge"]["threshold"] == 5);
    }

    TEST_CASE("routes without hooks answer 503")
    {
        testing::TempDir dir;
        store::Store store(dir / "s");
        StaticTokens auth(std::vector<ApiToken>{{"t", "op"}});
        ApiHandler handler(store, auth, {});
        const auto call = [&](std::string m, std::string p) {
            return handler.handle(ApiRequest{m, p, {}, "Bearer t", "{}"}).status;
        };
        CHECK(call("POST", "/api/sync") == 503);
        CHECK(call("PUT", "/api/settings") == 503);
        CHECK(call("GET", "/api/settings") == 200);
    }

    TEST_CASE("an unavailable store answers 503 and health says so")
    {
        Rig rig;
        rig.add_alert(kNow - 1h, "1");
        rig.store.set_fault_hook([](store::FaultPoint p, std::string_view) { return p == store::FaultPoint::BeforeAppend; });
        CHECK_THROWS_AS(rig.add_alert(kNow - 2h, "2"), Error);
        CHECK(rig.call("GET", "/api/alerts").status == 503);
        CHECK(rig.call("GET", "/api/dashboards/alerts").status == 503);
        const auto health = rig.call("GET", "/api/health", {}, {}, std::nullopt);
        CHECK(health.status == 200);
        CHECK(health.body.at("ok") == false);
    }

    TEST_CASE("incidents dashboard on an empty store")
    {
        Rig rig;
        const auto r = rig.call("GET", "/api/dashboards/incidents");
        REQUIRE(r.status == 200);
        CHECK(r.body["time_histogram"]["total"] == 0);
        CHECK(r.body["time_histogram"]["buckets"].size() == 60);
        CHECK(r.body["probability_histogram"]["scored"] == 0);
        CHECK(r.body["probability_histogram"]["mean"] == 0.0);
        CHECK(r.body["gauge"]["current"] == 0);
        CHECK(r.body["gauge"]["state"] == "ok");
        for (const auto& [k, v] : r.body["severity_counts"].items()) CHECK(v == 0);
        for (const auto& [k, v] : r.body["domain_counts"].items()) CHECK(v == 0);
    }

    TEST_CASE("dashboard numbers equal the oracle over random stores")
    {
        Rng rng(41);
        for (int round = 0; round < 5; ++round) {
            Rig rig;
            const auto fixture = testing::random_store(rng, 600, kNow, 90);
            testing::load_fixture(rig.store, fixture);
            const testing::AggregationOracle oracle(fixture);

            store::AlertFilter f;
            const auto [from, to] = store::resolve_range(f, kNow);
            f.from = from;
            f.to = to;
            const auto r = rig.call("GET", "/api/dashboards/alerts");
            REQUIRE(r.status == 200);
            CHECK(r.body["time_histogram"] == to_json(oracle.time_histogram(f, kNow)));
            CHECK(r.body["severity_counts"] == to_json(oracle.severity_counts(f)));
            CHECK(r.body["domain_counts"] == to_json(oracle.domain_counts(f)));
            CHECK(r.body["probability_histogram"] == to_json(oracle.probability_histogram(f)));
            CHECK(r.body["gauge"] == to_json(oracle.gauge(store::kDefaultGaugeWindow, store::kDefaultGaugeThreshold, kNow),
                                             store::kDefaultGaugeWindow));

            auto confirmed = f;
            confirmed.classification = Classification::Confirmed;
            const auto inc = rig.call("GET", "/api/dashboards/incidents");
            CHECK(inc.body["severity_counts"] == to_json(oracle.severity_counts(confirmed)));
            CHECK(inc.body["probability_histogram"] == to_json(oracle.probability_histogram(confirmed)));
        }
    }

    TEST_CASE("alert listing pages through every match")
    {
        Rng rng(5);
        Rig rig;
        const auto fixture = testing::random_store(rng, 800, kNow, 30);
        testing::load_fixture(rig.store, fixture);
        const testing::AggregationOracle oracle(fixture);
        std::vector<std::string> ids;
        for (std::size_t offset = 0;; offset += 17) {
            const auto r = rig.call("GET", "/api/alerts",
                                    {{"offset", std::to_string(offset)}, {"limit", "17"}, {"sort", "probability"}});
            REQUIRE(r.status == 200);
            if (r.body["items"].empty()) break;
            for (const auto& item : r.body["items"]) ids.push_back(item["id"]);
        }
        CHECK(ids == oracle.list_ids({}, store::SortKey::Probability));
    }

    TEST_CASE("property: reads leave the store content unchanged")
    {
        Rng rng(8);
        Rig rig;
        testing::load_fixture(rig.store, testing::random_store(rng, 400, kNow, 30));
        const auto before = rig.store.content_hash();
        const auto some = rig.store.alerts().front().id;
        for (const auto& path : {"/api/health", "/api/alerts", "/api/dashboards/alerts", "/api/dashboards/incidents",
                                 "/api/settings"}) {
            rig.call("GET", path);
        }
        rig.call("GET", "/api/alerts/" + some);
        rig.call("GET", "/api/alerts", {{"sort", "probability"}, {"min_probability", "0.5"}});
        CHECK(rig.store.content_hash() == before);
    }

    TEST_CASE("HTTP loopback")
    {
        Rig rig;
        const auto id = rig.add_alert(kNow - 1h, "1");
        HttpServer server(rig.handler);
        const int port = server.bind("127.0.0.1", 0);
        std::thread serving([&] { server.serve(); });

        httplib::Client client("127.0.0.1", port);
        client.set_connection_timeout(5);
        httplib::Result res;
        for (int i = 0; i < 200 && !(res = client.Get("/api/health")); ++i) std::this_thread::sleep_for(10ms);
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(client.Get("/api/alerts")->status == 401);

        const httplib::Headers auth{{"Authorization", "Bearer tok-bob"}};
        const auto list = client.Get("/api/alerts?limit=5", auth);
        REQUIRE(list);
        CHECK(list->status == 200);
        CHECK(json::parse(list->body)["total"] == 1);

        const auto post = client.Post("/api/alerts/" + id + "/classification", auth, R"({"classification":"irrelevant"})",
                                      "application/json");
        REQUIRE(post);
        CHECK(post->status == 200);
        CHECK(json::parse(post->body)["classified_by"] == "bob");
        CHECK(client.Post("/api/alerts/" + id + "/classification", auth, R"({"classification":"irrelevant"})",
                          "application/json")
                  ->status == 409);

        server.stop();
        serving.join();
    }

    TEST_CASE("constant_time_equal")
    {
        CHECK(constant_time_equal("", ""));
        CHECK(constant_time_equal("secret", "secret"));
        CHECK_FALSE(constant_time_equal("secret", "secreT"));
        CHECK_FALSE(constant_time_equal("secret", "secret2"));
        CHECK_FALSE(constant_time_equal("", "x"));
        CHECK_FALSE(constant_time_equal(std::string("a\0b", 3), std::string("a\0c", 3)));
        StaticTokens tokens(std::vector<ApiToken>{{"abc", "x"}, {"abd", "y"}});
        CHECK(tokens.authenticate("abd") == "y");
        CHECK_FALSE(tokens.authenticate("ab"));
    }
}
