#include "invscope/config.hpp"

#include <charconv>
#include <fstream>

#include "invscope/error.hpp"

namespace invscope {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidInput, "config: " + what); }

}  // namespace

json to_json(const Settings& s)
{
    return json{{"interval_seconds", s.interval_seconds},
                {"gauge_threshold", s.gauge_threshold},
                {"gauge_window_seconds", s.gauge_window_seconds},
                {"model_path", s.model_path ? json(*s.model_path) : json(nullptr)}};
}

Settings merge_settings(const Settings& base, const json& j)
{
    if (!j.is_object()) bad("settings must be an object");
    Settings s = base;
    for (const auto& [key, value] : j.items()) {
        if (key == "interval_seconds") {
            if (!value.is_number_integer() || value.get<std::int64_t>() < 1 || value.get<std::int64_t>() > 86400) {
                bad("interval_seconds must be an integer in [1, 86400]");
            }
            s.interval_seconds = value.get<int>();
        } else if (key == "gauge_threshold") {
            if (!value.is_number_integer() || value.get<std::int64_t>() < 1) bad("gauge_threshold must be >= 1");
            s.gauge_threshold = value.get<std::uint64_t>();
        } else if (key == "gauge_window_seconds") {
            if (!value.is_number_integer() || value.get<std::int64_t>() < 1) bad("gauge_window_seconds must be >= 1");
            s.gauge_window_seconds = value.get<std::int64_t>();
        } else if (key == "model_path") {
            if (value.is_null()) s.model_path.reset();
            else if (value.is_string()) s.model_path = value.get<std::string>();
            else bad("model_path must be a string or null");
        } else {
            bad("unknown setting " + key);
        }
    }
    return s;
}

std::pair<std::string, int> parse_listen(std::string_view text)
{
    std::string host = "127.0.0.1";
    std::string_view port_text = text;
    if (const auto colon = text.rfind(':'); colon != std::string_view::npos) {
        host = std::string(text.substr(0, colon));
        port_text = text.substr(colon + 1);
    }
    int port = -1;
    const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535 || host.empty()) {
        bad("listen address must be host:port, got " + std::string(text));
    }
    return {host, port};
}

Config config_from_json(const json& j, const fs::path& base_dir)
{
    if (!j.is_object()) bad("document must be an object");
    Config c;
    try {
        c.store = resolve(base_dir, j.at("store").get<std::string>());
        for (const auto& e : j.value("endpoints", json::array())) {
            sync::Endpoint ep;
            ep.name = e.at("name").get<std::string>();
            const auto kind = sync::parse_endpoint_kind(e.at("kind").get<std::string>());
            if (!kind) bad("endpoint " + ep.name + " has unknown kind");
            ep.kind = *kind;
            ep.path = resolve(base_dir, e.at("path").get<std::string>());
            const auto default_format = ep.kind == sync::EndpointKind::ImpDir ? "classifications" : "canonical";
            const auto format = sync::parse_endpoint_format(e.value("format", default_format));
            if (!format) bad("endpoint " + ep.name + " has unknown format");
            ep.format = *format;
            c.endpoints.push_back(std::move(ep));
        }
        if (j.contains("mode")) {
            const auto mode = sync::parse_mode(j.at("mode").get<std::string>());
            if (!mode) bad("mode must be embedded or passthrough");
            c.mode = *mode;
        }
        if (j.contains("rules_path")) c.rules_path = resolve(base_dir, j.at("rules_path").get<std::string>());
        if (j.contains("static_dir")) c.static_dir = resolve(base_dir, j.at("static_dir").get<std::string>());
        c.listen = j.value("listen", c.listen);
        parse_listen(c.listen);
        for (const auto& t : j.value("tokens", json::array())) {
            ApiToken token{t.at("token").get<std::string>(), t.at("operator_id").get<std::string>()};
            if (token.token.empty()) bad("empty api token");
            c.tokens.push_back(std::move(token));
        }
        json settings = json::object();
        for (const char* key : {"interval_seconds", "gauge_threshold", "gauge_window_seconds"}) {
            if (j.contains(key)) settings[key] = j.at(key);
        }
        if (j.contains("model_path")) {
            settings["model_path"] = resolve(base_dir, j.at("model_path").get<std::string>()).string();
        }
        c.settings = merge_settings(Settings{}, settings);
    } catch (const json::exception& e) {
        bad(e.what());
    }
    return c;
}

Config load_config(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot read config file " + path.string());
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) bad(path.string() + " is not valid JSON");
    return config_from_json(j, path.parent_path());
}

}  // namespace invscope
