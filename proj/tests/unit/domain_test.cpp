#include <doctest.h>

#include <algorithm>
#include <set>

#include "invscope/error.hpp"
#include "invscope/codec.hpp"
#include "invscope/domain.hpp"
#include "invscope/id.hpp"
#include "invscope/rng.hpp"
#include "random_data.hpp"

using namespace invscope;

TEST_SUITE("domain")
{
    TEST_CASE("timestamps parse offsets and print millisecond UTC")
    {
        const auto t = Timestamp::parse("2024-05-01T12:00:00+02:00");
        REQUIRE(t);
        CHECK(t->to_string() == "2024-05-01T10:00:00.000Z");
        CHECK(Timestamp::parse("2024-05-01T10:00:00.123456Z")->to_string() == "2024-05-01T10:00:00.123Z");
        CHECK_FALSE(Timestamp::parse("2024-05-01 10:00:00Z"));
        CHECK_FALSE(Timestamp::parse("2024-13-01T10:00:00Z"));
        CHECK_FALSE(Timestamp::parse(""));

        const auto late = *Timestamp::parse("2024-05-01T23:59:59.999Z");
        CHECK(late.day_floor().to_string() == "2024-05-01T00:00:00.000Z");
        CHECK((late + Millis(1)).day_floor().to_string() == "2024-05-02T00:00:00.000Z");
        // Before the epoch the floor still rounds down.
        CHECK(Timestamp::from_millis(-1).day_floor().millis() == -86'400'000);
    }

    TEST_CASE("ids at t and t+1ms are ordered")
    {
        const auto t = Timestamp::from_millis(1'700'000'000'000);
        const auto a = new_id(t);
        const auto b = new_id(t + Millis(1));
        CHECK(a < b);
        CHECK(is_valid_id(a));
        CHECK(a.size() == kIdLength);
    }

    TEST_CASE("10000 ids in one millisecond are distinct")
    {
        IdGenerator gen(1);
        const auto t = Timestamp::from_millis(1'700'000'000'000);
        std::set<std::string> ids;
        std::string prev;
        for (int i = 0; i < 10'000; ++i) {
            auto id = gen.next(t);
            CHECK(id > prev);
            prev = id;
            ids.insert(std::move(id));
        }
        CHECK(ids.size() == 10'000);
    }

    TEST_CASE("same time hint twice gives distinct ids")
    {
        const auto t = Timestamp::from_millis(42);
        CHECK(new_id(t) != new_id(t));
    }

    TEST_CASE("property: strictly increasing hints give strictly increasing ids")
    {
        Rng rng(11);
        IdGenerator gen(2);
        std::int64_t ms = 0;
        std::string prev;
        for (int i = 0; i < 5000; ++i) {
            ms += rng.between(1, 1'000'000'000);
            const auto id = gen.next(Timestamp::from_millis(ms));
            REQUIRE(id > prev);
            prev = id;
        }
    }

    TEST_CASE("derived ids are stable and content sensitive")
    {
        const auto t = Timestamp::from_millis(1'700'000'000'000);
        CHECK(derive_id(t, "a") == derive_id(t, "a"));
        CHECK(derive_id(t, "a") != derive_id(t, "b"));
        CHECK(derive_id(t, "a") < derive_id(t + Millis(1), "a"));
        CHECK(is_valid_id(derive_id(t, "x")));
    }

    TEST_CASE("validate_event")
    {
        Event ok = testing::make_event("ids-1", "1001", Timestamp::from_millis(0), "ids.failed_login", "srv-7",
                                       {{"src_ip", std::string("10.0.0.5")}});
        CHECK(validate_event(ok).empty());

        Event bad_key = ok;
        bad_key.attributes["Bad Key!"] = std::string("x");
        const auto v = validate_event(bad_key);
        REQUIRE(v.size() == 1);
        CHECK(v[0].code == "attribute_key_charset");

        Event two = ok;
        two.kind.clear();
        two.native_ref.clear();
        const auto v2 = validate_event(two);
        CHECK(v2.size() == 2);
        std::set<std::string> codes;
        for (const auto& x : v2) codes.insert(x.code);
        CHECK(codes == std::set<std::string>{"missing_kind", "missing_native_ref"});
    }

    TEST_CASE("property: sorting any permutation of severities yields the total order")
    {
        std::vector<Severity> s(std::begin(kAllSeverities), std::end(kAllSeverities));
        std::sort(s.begin(), s.end());
        do {
            auto copy = s;
            std::sort(copy.begin(), copy.end());
            CHECK(copy == std::vector<Severity>{Severity::Info, Severity::Low, Severity::Medium, Severity::High});
        } while (std::next_permutation(s.begin(), s.end()));
    }

    TEST_CASE("enum text round-trips")
    {
        for (Severity s : kAllSeverities) CHECK(parse_severity(to_string(s)) == s);
        for (auto d : {SensorDomain::Cyber, SensorDomain::Physical}) CHECK(parse_domain(to_string(d)) == d);
        for (auto c : {Classification::Confirmed, Classification::Irrelevant})
            CHECK(parse_classification(to_string(c)) == c);
        CHECK_FALSE(parse_severity("critical"));
    }

    TEST_CASE("property: encode, decode, encode is byte-identical")
    {
        Rng rng(5);
        const auto now = Timestamp::from_millis(1'760'000'000'000);
        for (int round = 0; round < 20; ++round) {
            const auto f = testing::random_store(rng, 300, now, 10);
            for (const auto& e : f.events) {
                const auto text = encode_line(e);
                const auto back = event_from_json(json::parse(text));
                CHECK(back == e);
                CHECK(encode_line(back) == text);
            }
            for (const auto& a : f.alerts) {
                const auto text = encode_line(a);
                CHECK(encode_line(alert_from_json(json::parse(text))) == text);
            }
            for (const auto& i : f.incidents) {
                const auto text = encode_line(i);
                CHECK(encode_line(incident_from_json(json::parse(text))) == text);
            }
            for (const auto& s : f.scores) {
                const auto text = encode_line(s);
                CHECK(encode_line(score_from_json(json::parse(text))) == text);
            }
        }
    }

    TEST_CASE("decoders reject schema mismatches")
    {
        CHECK_THROWS_AS(event_from_json(json{{"id", 1}}), Error);
        CHECK_THROWS_AS(alert_from_json(json::array()), Error);
        CHECK_THROWS_AS(score_from_json(json{{"alert_id", "x"}}), Error);
    }
}
