#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invscope/codec.hpp"
#include "invscope/config.hpp"
#include "invscope/store.hpp"
#include "invscope/sync.hpp"

namespace invscope::api {

/// Compares in time independent of where the inputs first differ.
bool constant_time_equal(std::string_view a, std::string_view b);

/// Resolves a bearer token to an operator id.
class Authenticator {
public:
    virtual ~Authenticator() = default;
    virtual std::optional<std::string> authenticate(std::string_view token) const = 0;
};

class StaticTokens final : public Authenticator {
public:
    explicit StaticTokens(std::vector<ApiToken> tokens) : tokens_(std::move(tokens)) {}
    std::optional<std::string> authenticate(std::string_view token) const override;

private:
    std::vector<ApiToken> tokens_;
};

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    /// Raw Authorization header value.
    std::optional<std::string> authorization;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    json body;
};

/// Wiring to the parts of the system the API controls. Unset hooks make
/// their routes answer 503.
struct ApiHooks {
    /// nullopt when a cycle is already in flight.
    std::function<std::optional<sync::SyncReport>()> trigger_sync;
    std::function<Settings()> settings;
    /// Validates, persists and applies a partial settings document.
    std::function<Settings(const json&)> update_settings;
    std::function<json()> scheduler_status;
    std::function<Timestamp()> clock;
};

// Response encodings, shared with the CLI.
json to_json(const store::TimeHistogram& h);
json to_json(const store::SeverityCounts& c);
json to_json(const store::DomainCounts& c);
json to_json(const store::ProbabilityHistogram& h);
json to_json(const store::Gauge& g, Millis window);
json to_json(const store::AlertSummary& s);
json to_json(const store::AlertPage& p);
json to_json(const store::AlertDetail& d);

/// The five dashboard aggregates for one filter.
json dashboard(const store::Store& store, const store::AlertFilter& filter, const Settings& settings, Timestamp now);

/// Transport-independent route table.
class ApiHandler {
public:
    ApiHandler(store::Store& store, const Authenticator& auth, ApiHooks hooks);

    ApiResponse handle(const ApiRequest& request) const;

private:
    ApiResponse route(const ApiRequest& request, const std::string& operator_id) const;
    Timestamp now() const;
    Settings current_settings() const;

    store::Store& store_;
    const Authenticator& auth_;
    ApiHooks hooks_;
};

/// HTTP/1.1 front for an ApiHandler, optionally serving static files at `/`.
class HttpServer {
public:
    HttpServer(const ApiHandler& handler, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~HttpServer();

    /// Binds and returns the port (useful with port 0).
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace invscope::api
