#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "invscope/codec.hpp"
#include "invscope/correlation/rules.hpp"
#include "invscope/domain.hpp"

namespace invscope::scenario {

/// Injected attack templates: `brute_force`, `physical_breach` and
/// `cyber_physical`.
struct Injection {
    std::string template_id;
    int count = 0;
    /// Per-template overrides of the integer ranges, e.g.
    /// {"attempts": [6, 10]}.
    json params = json::object();
};

struct ScenarioSpec {
    std::uint64_t seed = 42;
    double duration_hours = 72.0;
    Timestamp start = Timestamp::from_millis(1767571200000);  // 2026-01-05T00:00:00Z
    /// Independent background events per hour, by event kind.
    std::map<std::string, double> background;
    /// Benign look-alike bursts per hour: `benign_lockout`,
    /// `scanner_sweep`, `badge_malfunction`.
    std::map<std::string, double> decoys;
    std::vector<Injection> injections;
};

ScenarioSpec spec_from_json(const json& j);
json to_json(const ScenarioSpec& s);
/// seed 42, 72 h, ten instances of each template.
ScenarioSpec benchmark_spec();

struct GroundTruth {
    std::string scenario_id;
    std::string template_id;
    std::vector<std::string> native_refs;
    Timestamp started_at;
    Timestamp ended_at;
};

json to_json(const GroundTruth& g);
GroundTruth ground_truth_from_json(const json& j);

struct Generated {
    /// Sorted by occurred_at; native_refs are unique across the stream.
    std::vector<Event> events;
    std::vector<GroundTruth> truth;
};

/// Throws InvalidInput for an unknown template, decoy or background kind,
/// a bad parameter or duration_hours < 1.
Generated generate(const ScenarioSpec& spec);

inline constexpr double kConfirmOverlap = 0.5;
inline constexpr std::string_view kLabeler = "scenario-labeler";

/// Confirmed when at least half of an alert's events belong to one
/// injected scenario, Irrelevant otherwise. Events are looked up in
/// `events` by id; unresolvable ids count as background.
std::vector<Incident> label_alerts(std::span<const Alert> alerts, std::span<const Event> events,
                                   std::span<const GroundTruth> truth);

struct OutputSummary {
    std::size_t events = 0;
    std::size_t scenarios = 0;
    std::size_t alerts = 0;
    std::size_t confirmed = 0;
};

/// Writes events.jsonl, ground_truth.jsonl and classifications.jsonl
/// (IMP records for the alerts `rules` raise over the events).
OutputSummary write_outputs(const Generated& g, std::span<const correlation::Rule> rules,
                            const std::filesystem::path& out_dir);

std::vector<GroundTruth> read_ground_truth(const std::filesystem::path& path);

}  // namespace invscope::scenario
