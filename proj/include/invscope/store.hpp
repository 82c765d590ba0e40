#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "invscope/codec.hpp"
#include "invscope/domain.hpp"

namespace invscope::store {

/// Points where a test hook may simulate a crash during a write.
enum class FaultPoint {
    BeforeAppend,   // nothing written
    TornAppend,     // first half of the batch bytes written
    AfterAppend,    // batch durable, in-memory indexes not updated
    BeforeMetaWrite,
};

/// Returns true to crash at the given point. The store is unusable after a
/// crash until it is reopened from disk.
using FaultHook = std::function<bool(FaultPoint, std::string_view log_name)>;

/// Last durably ingested position of a sync endpoint.
struct Watermark {
    std::string file;
    std::uint64_t offset = 0;

    auto operator<=>(const Watermark&) const = default;
};

struct Meta {
    int format_version = 1;
    std::map<std::string, Watermark> watermarks;
    json settings = json::object();
};

struct AlertFilter {
    std::optional<SensorDomain> domain;
    std::optional<Severity> severity;
    std::optional<AlertStatus> status;
    std::optional<Classification> classification;
    std::optional<double> min_probability;
    /// Half-open raised_at range [from, to).
    std::optional<Timestamp> from;
    std::optional<Timestamp> to;
};

struct TimeHistogram {
    Timestamp from;
    Timestamp to;
    /// Contiguous UTC day buckets, zero-filled.
    std::vector<std::pair<Timestamp, std::uint64_t>> buckets;

    std::uint64_t total() const;
    bool operator==(const TimeHistogram&) const = default;
};

struct ProbabilityHistogram {
    double bucket_width = 0.1;
    /// Half-open buckets, last one closed at 1.0.
    std::vector<std::uint64_t> counts;
    std::uint64_t scored = 0;
    double mean = 0.0;

    bool operator==(const ProbabilityHistogram&) const = default;
};

struct Gauge {
    std::uint64_t current = 0;
    std::uint64_t threshold = 0;
    bool warn = false;

    bool operator==(const Gauge&) const = default;
};

using SeverityCounts = std::map<Severity, std::uint64_t>;
using DomainCounts = std::map<SensorDomain, std::uint64_t>;

enum class SortKey { RaisedAt, Probability };

struct AlertSummary {
    std::string id;
    std::string rule_id;
    Severity severity = Severity::Info;
    SensorDomain domain = SensorDomain::Cyber;
    std::string detector;
    std::string asset;
    Timestamp raised_at;
    AlertStatus status = AlertStatus::Open;
    std::size_t event_count = 0;
    std::optional<double> probability;
    std::optional<Classification> classification;

    bool operator==(const AlertSummary&) const = default;
};

struct AlertPage {
    std::vector<AlertSummary> items;
    std::size_t total = 0;
};

struct AlertDetail {
    Alert alert;
    std::vector<Event> events;
    std::optional<MlScore> score;
    std::optional<Incident> incident;
};

inline constexpr std::int64_t kDefaultHistogramDays = 60;
inline constexpr Millis kDefaultGaugeWindow = Millis(24LL * 3600 * 1000);
inline constexpr std::uint64_t kDefaultGaugeThreshold = 10'000;
inline constexpr std::size_t kMaxPageSize = 500;

/// The investigation database: four append-only logs plus meta.json in a
/// data directory, with in-memory indexes rebuilt on open. One writer at a
/// time; readers take a shared lock and never see a half-applied batch.
class Store {
public:
    explicit Store(std::filesystem::path dir);
    ~Store();

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    const std::filesystem::path& dir() const { return dir_; }

    // Writes. Duplicates are no-ops and are not counted.
    std::size_t put_events(std::span<const Event> events);
    std::size_t put_alerts(std::span<const Alert> alerts);
    /// Throws Conflict for a second incident on the same alert and
    /// Referential for an unknown alert. Closes the alert.
    void put_incident(const Incident& incident);
    std::size_t put_scores(std::span<const MlScore> scores);
    void close_alert(std::string_view alert_id);

    // Point lookups.
    std::optional<Event> find_event(std::string_view id) const;
    std::optional<Event> find_event_by_ref(std::string_view source_id, std::string_view native_ref) const;
    std::optional<Alert> find_alert(std::string_view id) const;
    std::optional<Incident> incident_for(std::string_view alert_id) const;
    /// Newest score across models.
    std::optional<MlScore> current_score(std::string_view alert_id) const;
    bool has_score(std::string_view alert_id, std::string_view model_id) const;

    // Snapshots in insertion order.
    std::vector<Event> events() const;
    std::vector<Alert> alerts() const;
    std::vector<Incident> incidents() const;
    std::vector<MlScore> scores() const;
    std::size_t event_count() const;
    std::size_t alert_count() const;

    // Aggregations.
    TimeHistogram alert_time_histogram(const AlertFilter& filter, Timestamp now) const;
    SeverityCounts severity_counts(const AlertFilter& filter) const;
    DomainCounts domain_counts(const AlertFilter& filter) const;
    ProbabilityHistogram probability_histogram(const AlertFilter& filter, std::size_t bucket_count = 10) const;
    /// Alerts raised in [now - window, now]; the filter's time range is
    /// ignored.
    Gauge alert_gauge(Millis window, std::uint64_t warn_threshold, Timestamp now,
                      const AlertFilter& filter = {}) const;
    AlertPage list_alerts(const AlertFilter& filter, SortKey sort, std::size_t offset, std::size_t limit) const;
    AlertDetail get_alert_detail(std::string_view alert_id) const;

    // Metadata.
    Meta meta() const;
    /// Watermarks only advance; a regression throws Precondition.
    void set_watermark(const std::string& endpoint, const Watermark& mark);
    /// Several endpoints in one atomic meta.json write.
    void set_watermarks(const std::map<std::string, Watermark>& marks);
    void set_settings(const json& settings);

    void set_fault_hook(FaultHook hook);
    /// False once a write failed or a simulated crash fired.
    bool available() const;
    /// Hash over every log file and meta.json.
    std::uint64_t content_hash() const;

private:
    void replay();
    std::size_t replay_log(const std::string& name, const std::function<void(const json&)>& apply);
    void append(const std::string& log_name, const std::vector<std::string>& records);
    void write_meta_locked();
    void ensure_available() const;
    bool matches(const Alert& a, const AlertFilter& f) const;
    std::optional<double> current_probability(const std::string& alert_id) const;
    AlertSummary summarize(const Alert& a) const;

    void apply_event(Event e);
    void apply_alert(Alert a);
    void apply_status(const std::string& id, AlertStatus s);
    void apply_incident(Incident i);
    void apply_score(MlScore s);

    std::filesystem::path dir_;
    mutable std::shared_mutex mu_;
    bool broken_ = false;
    FaultHook fault_hook_;

    std::vector<Event> events_;
    std::unordered_map<std::string, std::size_t> event_by_id_;
    std::unordered_map<std::string, std::size_t> event_by_ref_;

    std::vector<Alert> alerts_;
    std::unordered_map<std::string, std::size_t> alert_by_id_;
    std::multimap<Timestamp, std::size_t> alerts_by_time_;

    std::vector<Incident> incidents_;
    std::unordered_map<std::string, std::size_t> incident_by_alert_;

    std::vector<MlScore> scores_;
    std::unordered_map<std::string, std::map<std::string, std::size_t, std::less<>>> scores_by_alert_;

    Meta meta_;
};

/// Resolves an unset range to the last 60 UTC days ending with today.
std::pair<Timestamp, Timestamp> resolve_range(const AlertFilter& filter, Timestamp now);

}  // namespace invscope::store
