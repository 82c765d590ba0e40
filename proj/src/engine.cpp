#include "invscope/correlation/engine.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <set>

#include "invscope/error.hpp"
#include "invscope/id.hpp"

namespace invscope::correlation {

namespace {

constexpr Timestamp kNever = Timestamp::from_millis(std::numeric_limits<std::int64_t>::min() / 2);

std::string plural(std::size_t n, std::string_view noun)
{
    return std::to_string(n) + " " + std::string(noun) + (n == 1 ? "" : "s");
}

std::pair<Timestamp, Timestamp> time_bounds(std::span<const Event> a, std::span<const Event> b)
{
    Timestamp lo = Timestamp::from_millis(std::numeric_limits<std::int64_t>::max());
    Timestamp hi = Timestamp::from_millis(std::numeric_limits<std::int64_t>::min());
    for (auto span : {a, b}) {
        for (const Event& e : span) {
            lo = std::min(lo, e.occurred_at);
            hi = std::max(hi, e.occurred_at);
        }
    }
    return {lo, hi};
}

struct Pending {
    std::vector<std::size_t> primary;
    Timestamp completed_at;
    std::set<std::string> corr_values;
};

struct GroupState {
    std::deque<std::size_t> window;
    Timestamp suppressed_until = kNever;
    std::optional<Pending> pending;
};

class RuleRunner {
public:
    RuleRunner(const Rule& rule, std::span<const Event> events, std::vector<Alert>& out)
        : rule_(rule), events_(events), out_(out)
    {
    }

    void step(std::size_t i)
    {
        const Event& e = events_[i];
        const Timestamp t = e.occurred_at;
        std::optional<std::string> secondary_value;
        if (rule_.join && rule_.join->secondary.evaluate(e)) {
            secondary_value = rule_.join->secondary_field.resolve(e);
            if (secondary_value) fire_pending(i, *secondary_value);
        }
        if (rule_.join && rule_.join->order == JoinOrder::AnyOrder) {
            const Timestamp horizon = t - seconds_ms(rule_.join->max_gap_seconds);
            while (!history_.empty() && events_[history_.front()].occurred_at < horizon) history_.pop_front();
        }

        if (rule_.predicate.evaluate(e)) {
            if (auto key = group_key(rule_, e)) on_primary(i, *key);
        }

        if (secondary_value && rule_.join->order == JoinOrder::AnyOrder) history_.push_back(i);
    }

private:
    void on_primary(std::size_t i, const std::string& key)
    {
        const Timestamp t = events_[i].occurred_at;
        GroupState& g = groups_[key];
        if (t < g.suppressed_until) return;

        g.window.push_back(i);
        const Timestamp horizon = t - seconds_ms(rule_.window_seconds);
        while (events_[g.window.front()].occurred_at < horizon) g.window.pop_front();
        if (static_cast<std::int64_t>(g.window.size()) < rule_.threshold) return;

        std::vector<std::size_t> primary(g.window.begin(), g.window.end());
        g.window.clear();
        if (!rule_.join) {
            emit(g, primary, {}, t);
            return;
        }

        std::set<std::string> corr;
        for (std::size_t p : primary) {
            if (auto v = rule_.join->primary_field.resolve(events_[p])) corr.insert(std::move(*v));
        }
        if (rule_.join->order == JoinOrder::AnyOrder) {
            std::vector<std::size_t> earlier;
            for (std::size_t h : history_) {
                const auto v = rule_.join->secondary_field.resolve(events_[h]);
                if (v && corr.contains(*v)) earlier.push_back(h);
            }
            if (!earlier.empty()) {
                emit(g, primary, earlier, t);
                return;
            }
        }
        g.pending = Pending{std::move(primary), t, std::move(corr)};
        pending_groups_.insert(key);
    }

    void fire_pending(std::size_t i, const std::string& value)
    {
        const Timestamp t = events_[i].occurred_at;
        const Millis gap = seconds_ms(rule_.join->max_gap_seconds);
        for (auto it = pending_groups_.begin(); it != pending_groups_.end();) {
            GroupState& g = groups_[*it];
            if (!g.pending || t > g.pending->completed_at + gap) {
                g.pending.reset();
                it = pending_groups_.erase(it);
                continue;
            }
            if (g.pending->corr_values.contains(value)) {
                const std::vector<std::size_t> primary = std::move(g.pending->primary);
                g.pending.reset();
                it = pending_groups_.erase(it);
                emit(g, primary, {i}, t);
                continue;
            }
            ++it;
        }
    }

    void emit(GroupState& g, const std::vector<std::size_t>& primary, const std::vector<std::size_t>& secondary,
              Timestamp at)
    {
        std::vector<Event> p;
        std::vector<Event> s;
        for (std::size_t i : primary) p.push_back(events_[i]);
        for (std::size_t i : secondary) s.push_back(events_[i]);
        out_.push_back(make_alert(rule_, p, s));
        g.suppressed_until = at + seconds_ms(rule_.suppress_seconds);
        g.window.clear();
        // A join fired from earlier secondaries also retires any older pending match.
        g.pending.reset();
    }

    const Rule& rule_;
    std::span<const Event> events_;
    std::vector<Alert>& out_;
    std::map<std::string, GroupState> groups_;
    std::set<std::string> pending_groups_;
    std::deque<std::size_t> history_;
};

}  // namespace

std::optional<std::string> group_key(const Rule& rule, const Event& e)
{
    if (rule.group_by.empty()) return std::string("(all)");
    std::string key;
    for (std::size_t i = 0; i < rule.group_by.size(); ++i) {
        auto v = rule.group_by[i].resolve(e);
        if (!v) return std::nullopt;
        if (i) key += ", ";
        key += rule.group_by[i].text() + "=" + *v;
    }
    return key;
}

std::string render_justification(const Rule& rule, std::span<const Event> matched)
{
    return render_justification(rule, matched, {});
}

std::string render_justification(const Rule& rule, std::span<const Event> primary, std::span<const Event> secondary)
{
    if (primary.empty()) throw Error(ErrorCode::Precondition, "justification needs at least one matched event");
    const auto [first, last] = time_bounds(primary, secondary);
    const std::string key = group_key(rule, primary.front()).value_or("(unknown)");

    std::string text = "Correlation rule \"" + rule.name + "\" (" + rule.rule_id + ") matched " +
                       plural(primary.size() + secondary.size(), "event") + " for group " + key;
    if (!rule.join) {
        text += " within a " + std::to_string(rule.window_seconds) + "s window (threshold " +
                std::to_string(rule.threshold) + ")";
    } else {
        text += ": " + plural(primary.size(), "primary event") + " matching [" + rule.predicate.describe() +
                "] within a " + std::to_string(rule.window_seconds) + "s window (threshold " +
                std::to_string(rule.threshold) + "), correlated with " + plural(secondary.size(), "secondary event") +
                " matching [" + rule.join->secondary.describe() + "] on " + rule.join->primary_field.text() + " = " +
                rule.join->secondary_field.text() + " within " + std::to_string(rule.join->max_gap_seconds) + "s";
    }
    text += "; first event at " + first.to_string() + ", last event at " + last.to_string() + ".";
    return text;
}

Alert make_alert(const Rule& rule, std::span<const Event> primary, std::span<const Event> secondary)
{
    Alert a;
    a.rule_id = rule.rule_id;
    a.severity = rule.severity;
    a.detector = rule.detector;
    a.status = AlertStatus::Open;

    a.raised_at = primary.empty() ? secondary.front().occurred_at : primary.front().occurred_at;
    std::set<SensorDomain> domains;
    std::map<std::string, std::size_t> asset_counts;
    std::vector<std::string> asset_order;
    for (auto span : {primary, secondary}) {
        for (const Event& e : span) {
            a.event_ids.push_back(e.id);
            a.raised_at = std::max(a.raised_at, e.occurred_at);
            domains.insert(e.domain);
            if (asset_counts[e.asset]++ == 0) asset_order.push_back(e.asset);
        }
    }
    // Most frequent asset, earliest seen on ties.
    std::size_t best = 0;
    for (const auto& asset : asset_order) {
        if (asset_counts[asset] > best) {
            best = asset_counts[asset];
            a.asset = asset;
        }
    }
    if (domains.size() == 1) {
        a.domain = *domains.begin();
    } else {
        a.domain = SensorDomain::Cyber;
        a.attributes.emplace("cross_domain", true);
    }
    if (!primary.empty()) {
        if (auto key = group_key(rule, primary.front())) a.attributes.emplace("group_key", *key);
    }
    a.justification = render_justification(rule, primary, secondary);

    std::string content = rule.rule_id;
    for (const auto& id : a.event_ids) content += "|" + id;
    a.id = derive_id(a.raised_at, content);
    return a;
}

std::vector<Alert> evaluate_stream(std::span<const Event> events, std::span<const Rule> rules)
{
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].occurred_at < events[i - 1].occurred_at) {
            throw Error(ErrorCode::Precondition, "events must be sorted by occurred_at");
        }
    }

    std::vector<Alert> out;
    std::vector<RuleRunner> runners;
    runners.reserve(rules.size());
    for (const Rule& r : rules) runners.emplace_back(r, events, out);
    for (std::size_t i = 0; i < events.size(); ++i) {
        for (auto& runner : runners) runner.step(i);
    }
    return out;
}

}  // namespace invscope::correlation
