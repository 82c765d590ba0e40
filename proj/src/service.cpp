#include "invscope/service.hpp"

#include <fstream>
#include <sstream>

#include "invscope/error.hpp"

namespace invscope {

std::vector<correlation::Rule> load_rules(const std::optional<std::filesystem::path>& path)
{
    if (!path) return correlation::default_rules();
    std::ifstream in(*path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot read rule file " + path->string());
    std::ostringstream text;
    text << in.rdbuf();
    auto result = correlation::compile_rules(text.str());
    if (!result.ok()) {
        std::string message = "rule file " + path->string() + " has errors:";
        for (const auto& e : result.errors) {
            message += "\n  " + (e.rule_id.empty() ? std::string("?") : e.rule_id) + " " + e.path + ": " + e.message;
        }
        throw Error(ErrorCode::InvalidInput, message);
    }
    return std::move(result.rules);
}

Service::Service(Config config) : config_(std::move(config))
{
    store_ = std::make_unique<store::Store>(config_.store);
    sync_ = std::make_unique<sync::SyncService>(*store_, config_.endpoints, config_.mode, load_rules(config_.rules_path));

    settings_ = config_.settings;
    const json saved = store_->meta().settings;
    if (saved.is_object() && !saved.empty()) {
        try {
            settings_ = merge_settings(settings_, saved);
        } catch (const Error& e) {
            warnings_.push_back(std::string("ignoring saved settings: ") + e.what());
        }
    }
    try {
        apply_model(settings_.model_path);
    } catch (const Error& e) {
        warnings_.push_back(std::string("running without a model: ") + e.what());
    }
    scheduler_ = std::make_unique<sync::Scheduler>(
        [this](sync::Trigger t) { return sync_->run_cycle(t); },
        std::chrono::seconds(settings_.interval_seconds));
}

Service::~Service()
{
    if (scheduler_) scheduler_->stop();
}

void Service::apply_model(const std::optional<std::string>& path)
{
    if (!path) {
        sync_->set_model(nullptr);
        return;
    }
    sync_->set_model(std::make_shared<const ml::Model>(ml::Model::load(*path)));
}

Settings Service::settings() const
{
    std::lock_guard lock(settings_mu_);
    return settings_;
}

Settings Service::update_settings(const json& patch)
{
    std::lock_guard lock(settings_mu_);
    const Settings next = merge_settings(settings_, patch);
    if (next.model_path != settings_.model_path) {
        try {
            apply_model(next.model_path);
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidInput, std::string("model_path rejected: ") + e.what());
        }
    }
    store_->set_settings(to_json(next));
    scheduler_->set_interval(std::chrono::seconds(next.interval_seconds));
    settings_ = next;
    return settings_;
}

api::ApiHooks Service::hooks()
{
    api::ApiHooks h;
    h.trigger_sync = [this] { return scheduler_->trigger_manual(); };
    h.settings = [this] { return settings(); };
    h.update_settings = [this](const json& patch) { return update_settings(patch); };
    h.scheduler_status = [this] {
        const auto last = scheduler_->last_report();
        return json{{"running", scheduler_->running()},
                    {"cycle_in_flight", scheduler_->cycle_in_flight()},
                    {"completed_cycles", scheduler_->completed_cycles()},
                    {"skipped_ticks", scheduler_->skipped_ticks()},
                    {"interval_seconds", scheduler_->interval().count() / 1000},
                    {"last_report", last ? sync::to_json(*last) : json(nullptr)}};
    };
    return h;
}

}  // namespace invscope
