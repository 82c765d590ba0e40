#include <algorithm>
#include <cmath>
#include <mutex>

#include "invscope/error.hpp"
#include "invscope/store.hpp"

namespace invscope::store {

namespace {

constexpr Millis kDay = Millis(86'400'000);

void check_range(const AlertFilter& f)
{
    if (f.from && f.to && *f.from > *f.to) throw Error(ErrorCode::InvalidInput, "inverted time range");
}

}  // namespace

std::uint64_t TimeHistogram::total() const
{
    std::uint64_t n = 0;
    for (const auto& [start, count] : buckets) n += count;
    return n;
}

std::pair<Timestamp, Timestamp> resolve_range(const AlertFilter& filter, Timestamp now)
{
    const Timestamp to = filter.to.value_or(now.day_floor() + kDay);
    const Timestamp from = filter.from.value_or(to - kDay * kDefaultHistogramDays);
    if (from > to) throw Error(ErrorCode::InvalidInput, "inverted time range");
    return {from, to};
}

bool Store::matches(const Alert& a, const AlertFilter& f) const
{
    if (f.domain && a.domain != *f.domain) return false;
    if (f.severity && a.severity != *f.severity) return false;
    if (f.status && a.status != *f.status) return false;
    if (f.from && a.raised_at < *f.from) return false;
    if (f.to && a.raised_at >= *f.to) return false;
    if (f.classification) {
        const auto it = incident_by_alert_.find(a.id);
        if (it == incident_by_alert_.end() || incidents_[it->second].classification != *f.classification) return false;
    }
    if (f.min_probability) {
        const auto p = current_probability(a.id);
        if (!p || *p < *f.min_probability) return false;
    }
    return true;
}

TimeHistogram Store::alert_time_histogram(const AlertFilter& filter, Timestamp now) const
{
    const auto [from, to] = resolve_range(filter, now);
    AlertFilter f = filter;
    f.from = from;
    f.to = to;

    TimeHistogram h;
    h.from = from;
    h.to = to;
    const Timestamp first_day = from.day_floor();
    for (Timestamp d = first_day; d < to; d = d + kDay) h.buckets.emplace_back(d, 0);

    std::shared_lock lock(mu_);
    ensure_available();
    for (auto it = alerts_by_time_.lower_bound(from); it != alerts_by_time_.end() && it->first < to; ++it) {
        const Alert& a = alerts_[it->second];
        if (!matches(a, f)) continue;
        const auto idx = static_cast<std::size_t>((a.raised_at.day_floor() - first_day) / kDay);
        ++h.buckets[idx].second;
    }
    return h;
}

SeverityCounts Store::severity_counts(const AlertFilter& filter) const
{
    check_range(filter);
    SeverityCounts counts;
    for (Severity s : kAllSeverities) counts[s] = 0;
    std::shared_lock lock(mu_);
    ensure_available();
    for (const Alert& a : alerts_) {
        if (matches(a, filter)) ++counts[a.severity];
    }
    return counts;
}

DomainCounts Store::domain_counts(const AlertFilter& filter) const
{
    check_range(filter);
    DomainCounts counts{{SensorDomain::Cyber, 0}, {SensorDomain::Physical, 0}};
    std::shared_lock lock(mu_);
    ensure_available();
    for (const Alert& a : alerts_) {
        if (matches(a, filter)) ++counts[a.domain];
    }
    return counts;
}

ProbabilityHistogram Store::probability_histogram(const AlertFilter& filter, std::size_t bucket_count) const
{
    check_range(filter);
    if (bucket_count == 0) throw Error(ErrorCode::InvalidInput, "bucket count must be positive");
    ProbabilityHistogram h;
    h.bucket_width = 1.0 / static_cast<double>(bucket_count);
    h.counts.assign(bucket_count, 0);
    double sum = 0.0;

    std::shared_lock lock(mu_);
    ensure_available();
    for (const Alert& a : alerts_) {
        if (!matches(a, filter)) continue;
        const auto p = current_probability(a.id);
        if (!p) continue;
        const auto idx = std::min(static_cast<std::size_t>(std::floor(*p * static_cast<double>(bucket_count))),
                                  bucket_count - 1);
        ++h.counts[idx];
        ++h.scored;
        sum += *p;
    }
    h.mean = h.scored ? sum / static_cast<double>(h.scored) : 0.0;
    return h;
}

Gauge Store::alert_gauge(Millis window, std::uint64_t warn_threshold, Timestamp now, const AlertFilter& filter) const
{
    AlertFilter f = filter;
    f.from.reset();
    f.to.reset();
    if (window.count() <= 0) throw Error(ErrorCode::InvalidInput, "gauge window must be positive");
    Gauge g;
    g.threshold = warn_threshold;
    std::shared_lock lock(mu_);
    ensure_available();
    for (auto it = alerts_by_time_.lower_bound(now - window); it != alerts_by_time_.end() && it->first <= now; ++it) {
        if (matches(alerts_[it->second], f)) ++g.current;
    }
    g.warn = g.current >= warn_threshold;
    return g;
}

AlertSummary Store::summarize(const Alert& a) const
{
    AlertSummary s;
    s.id = a.id;
    s.rule_id = a.rule_id;
    s.severity = a.severity;
    s.domain = a.domain;
    s.detector = a.detector;
    s.asset = a.asset;
    s.raised_at = a.raised_at;
    s.status = a.status;
    s.event_count = a.event_ids.size();
    s.probability = current_probability(a.id);
    const auto it = incident_by_alert_.find(a.id);
    if (it != incident_by_alert_.end()) s.classification = incidents_[it->second].classification;
    return s;
}

AlertPage Store::list_alerts(const AlertFilter& filter, SortKey sort, std::size_t offset, std::size_t limit) const
{
    if (limit < 1 || limit > kMaxPageSize) throw Error(ErrorCode::InvalidInput, "limit must be in [1, 500]");
    check_range(filter);

    std::vector<AlertSummary> rows;
    {
        std::shared_lock lock(mu_);
        ensure_available();
        for (const Alert& a : alerts_) {
            if (matches(a, filter)) rows.push_back(summarize(a));
        }
    }

    auto by_key = [sort](const AlertSummary& x, const AlertSummary& y) {
        if (sort == SortKey::Probability) {
            if (x.probability.has_value() != y.probability.has_value()) return x.probability.has_value();
            if (x.probability && *x.probability != *y.probability) return *x.probability > *y.probability;
        } else if (x.raised_at != y.raised_at) {
            return x.raised_at > y.raised_at;
        }
        return x.id > y.id;
    };
    std::sort(rows.begin(), rows.end(), by_key);

    AlertPage page;
    page.total = rows.size();
    if (offset < rows.size()) {
        const std::size_t end = std::min(rows.size(), offset + limit);
        page.items.assign(std::make_move_iterator(rows.begin() + static_cast<std::ptrdiff_t>(offset)),
                          std::make_move_iterator(rows.begin() + static_cast<std::ptrdiff_t>(end)));
    }
    return page;
}

AlertDetail Store::get_alert_detail(std::string_view alert_id) const
{
    std::shared_lock lock(mu_);
    ensure_available();
    const auto it = alert_by_id_.find(std::string(alert_id));
    if (it == alert_by_id_.end()) throw Error(ErrorCode::NotFound, "unknown alert " + std::string(alert_id));

    AlertDetail d;
    d.alert = alerts_[it->second];
    for (const auto& eid : d.alert.event_ids) {
        const auto e = event_by_id_.find(eid);
        if (e != event_by_id_.end()) d.events.push_back(events_[e->second]);
    }
    std::stable_sort(d.events.begin(), d.events.end(),
                     [](const Event& a, const Event& b) { return a.occurred_at < b.occurred_at; });

    if (const auto s = scores_by_alert_.find(d.alert.id); s != scores_by_alert_.end()) {
        for (const auto& [model, idx] : s->second) {
            if (!d.score || scores_[idx].scored_at > d.score->scored_at) d.score = scores_[idx];
        }
    }
    if (const auto inc = incident_by_alert_.find(d.alert.id); inc != incident_by_alert_.end()) {
        d.incident = incidents_[inc->second];
    }
    return d;
}

}  // namespace invscope::store
