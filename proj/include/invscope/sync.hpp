#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "invscope/codec.hpp"
#include "invscope/correlation/rules.hpp"
#include "invscope/ingest.hpp"
#include "invscope/ml/model.hpp"
#include "invscope/store.hpp"

namespace invscope::sync {

enum class EndpointKind { CorrelationDir, ImpDir };

/// Record formats a directory endpoint may carry. Event formats go through
/// the ingest parsers; `alerts` is ready-made Alert JSONL (passthrough) and
/// `classifications` is the IMP feed.
enum class EndpointFormat { IdsKv, AccessJson, Canonical, Alerts, Classifications };

enum class Mode { Embedded, Passthrough };

enum class Trigger { Scheduled, Manual };

std::string_view to_string(EndpointKind k);
std::string_view to_string(EndpointFormat f);
std::string_view to_string(Mode m);
std::string_view to_string(Trigger t);
std::optional<EndpointKind> parse_endpoint_kind(std::string_view text);
std::optional<EndpointFormat> parse_endpoint_format(std::string_view text);
std::optional<Mode> parse_mode(std::string_view text);

struct Endpoint {
    /// Watermark key in meta.json.
    std::string name;
    EndpointKind kind = EndpointKind::CorrelationDir;
    std::filesystem::path path;
    EndpointFormat format = EndpointFormat::Canonical;
};

struct EndpointReport {
    std::string name;
    std::size_t read = 0;
    std::size_t accepted = 0;
    std::size_t duplicates = 0;
    std::size_t rejects = 0;
    std::optional<std::string> error;
};

struct SyncReport {
    std::vector<EndpointReport> endpoints;
    std::size_t alerts_raised = 0;
    std::size_t alerts_scored = 0;
    std::size_t scoring_skipped = 0;
    Timestamp started_at;
    Timestamp finished_at;
    Trigger trigger = Trigger::Manual;
    /// Set when the store failed; watermarks were not advanced past
    /// unpersisted data.
    std::optional<std::string> error;
};

json to_json(const SyncReport& r);

/// One classification record of the IMP feed:
/// {alert_id, classification, classified_by, time, note?}.
std::optional<Incident> parse_classification_line(std::string_view line, std::string* reason = nullptr);

/// Renders an Incident back into the IMP record format.
json classification_record(const Incident& i);

/// Stores one Incident per IMP record. Records for unknown alerts are
/// rejects; records for already classified alerts are duplicates.
EndpointReport import_classifications(store::Store& store, std::span<const std::string> lines);

/// Lines appended to the endpoint's files after the watermark. Files are
/// visited in name order; only newline-terminated lines are returned and
/// `next` points just after the last of them.
struct PendingInput {
    std::vector<std::string> lines;
    store::Watermark next;
};
PendingInput read_pending(const std::filesystem::path& dir, const store::Watermark& from);

/// Pulls new records from every endpoint, persists them and, when a model
/// is set, scores the new alerts. All watermarks move in one meta write
/// after the data they cover is durable.
class SyncService {
public:
    SyncService(store::Store& store, std::vector<Endpoint> endpoints, Mode mode,
                std::vector<correlation::Rule> rules);

    void set_model(std::shared_ptr<const ml::Model> model);
    std::shared_ptr<const ml::Model> model() const;

    /// Not reentrant; callers serialize (the Scheduler does).
    SyncReport run_cycle(Trigger trigger);

    store::Store& store() { return store_; }

private:
    store::Store& store_;
    std::vector<Endpoint> endpoints_;
    Mode mode_;
    std::vector<correlation::Rule> rules_;
    mutable std::mutex model_mu_;
    std::shared_ptr<const ml::Model> model_;
};

/// Fires a cycle at start and then every `interval`. A tick that finds a
/// cycle in flight is skipped and counted; ticks are never queued.
class Scheduler {
public:
    using Cycle = std::function<SyncReport(Trigger)>;
    using Clock = std::chrono::steady_clock;

    Scheduler(Cycle cycle, std::chrono::milliseconds interval);
    ~Scheduler();

    Scheduler(const Scheduler&) = delete;
    Scheduler& operator=(const Scheduler&) = delete;

    void start();
    /// Returns after any in-flight scheduled cycle finishes.
    void stop();
    bool running() const { return running_.load(); }

    /// Runs a cycle now, or returns nullopt when one is in flight.
    std::optional<SyncReport> trigger_manual();

    void set_interval(std::chrono::milliseconds interval);
    std::chrono::milliseconds interval() const;
    std::uint64_t skipped_ticks() const { return skipped_.load(); }
    std::uint64_t completed_cycles() const { return completed_.load(); }
    bool cycle_in_flight() const { return in_cycle_.load(); }
    std::optional<SyncReport> last_report() const;

private:
    void loop();
    std::optional<SyncReport> run_guarded(Trigger trigger);

    Cycle cycle_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::chrono::milliseconds interval_;
    bool stop_requested_ = false;
    std::thread thread_;
    std::atomic<bool> running_{false};

    std::mutex cycle_mu_;
    std::atomic<bool> in_cycle_{false};
    std::atomic<std::uint64_t> skipped_{0};
    std::atomic<std::uint64_t> completed_{0};
    std::optional<SyncReport> last_report_;
};

}  // namespace invscope::sync
