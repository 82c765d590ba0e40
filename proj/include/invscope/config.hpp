#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "invscope/codec.hpp"
#include "invscope/sync.hpp"

namespace invscope {

struct ApiToken {
    std::string token;
    std::string operator_id;
};

/// Runtime-adjustable settings exposed by the settings route and kept in
/// meta.json so they survive restarts.
struct Settings {
    int interval_seconds = 60;
    std::uint64_t gauge_threshold = store::kDefaultGaugeThreshold;
    std::int64_t gauge_window_seconds = 24 * 3600;
    std::optional<std::string> model_path;

    bool operator==(const Settings&) const = default;
};

json to_json(const Settings& s);
/// Overlays the keys present in `j` onto `base`. Throws InvalidInput for
/// unknown keys or out-of-range values.
Settings merge_settings(const Settings& base, const json& j);

struct Config {
    std::filesystem::path store;
    std::vector<sync::Endpoint> endpoints;
    sync::Mode mode = sync::Mode::Embedded;
    std::optional<std::filesystem::path> rules_path;
    std::string listen = "127.0.0.1:8080";
    std::vector<ApiToken> tokens;
    std::optional<std::filesystem::path> static_dir;
    Settings settings;
};

/// Relative paths resolve against `base_dir`.
Config config_from_json(const json& j, const std::filesystem::path& base_dir);
Config load_config(const std::filesystem::path& path);

/// `host:port`, or just a port.
std::pair<std::string, int> parse_listen(std::string_view text);

}  // namespace invscope
