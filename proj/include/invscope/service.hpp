#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "invscope/api.hpp"
#include "invscope/config.hpp"
#include "invscope/correlation/rules.hpp"
#include "invscope/store.hpp"
#include "invscope/sync.hpp"

namespace invscope {

/// Compiles the rule file, or the built-in rules when `path` is empty.
/// Throws InvalidInput listing every compile error.
std::vector<correlation::Rule> load_rules(const std::optional<std::filesystem::path>& path);

/// A configured deployment: store, sync mechanism, scheduler and the
/// settings the API may change. Settings saved in the store override the
/// config file.
class Service {
public:
    explicit Service(Config config);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    const Config& config() const { return config_; }
    store::Store& store() { return *store_; }
    sync::SyncService& sync() { return *sync_; }
    sync::Scheduler& scheduler() { return *scheduler_; }

    Settings settings() const;
    /// Validates and applies a partial settings document, then persists it.
    /// A model path that fails to load is rejected.
    Settings update_settings(const json& patch);

    api::ApiHooks hooks();

    /// Non-fatal problems found at startup, such as an unreadable model.
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    void apply_model(const std::optional<std::string>& path);

    Config config_;
    std::unique_ptr<store::Store> store_;
    std::unique_ptr<sync::SyncService> sync_;
    std::unique_ptr<sync::Scheduler> scheduler_;
    mutable std::mutex settings_mu_;
    Settings settings_;
    std::vector<std::string> warnings_;
};

}  // namespace invscope
