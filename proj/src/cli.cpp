#include "invscope/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "invscope/api.hpp"
#include "invscope/config.hpp"
#include "invscope/correlation/engine.hpp"
#include "invscope/error.hpp"
#include "invscope/ingest.hpp"
#include "invscope/ml/dataset.hpp"
#include "invscope/ml/model.hpp"
#include "invscope/ml/scoring.hpp"
#include "invscope/scenario.hpp"
#include "invscope/service.hpp"
#include "invscope/store.hpp"
#include "invscope/sync.hpp"

namespace invscope {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct Globals {
    std::string config_path;
    std::string store_path;
};

std::optional<Config> resolve_config(const Globals& g)
{
    std::string path = g.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("INVSCOPE_CONFIG"); env && *env) path = env;
    }
    std::optional<Config> config;
    if (!path.empty()) config = load_config(path);
    if (!g.store_path.empty()) {
        if (!config) config = Config{};
        config->store = g.store_path;
    }
    return config;
}

Config require_config(const Globals& g)
{
    auto config = resolve_config(g);
    if (!config || config->store.empty()) {
        throw Error(ErrorCode::InvalidInput, "no store configured; pass --store <dir> or --config <file>");
    }
    return *config;
}

std::unique_ptr<store::Store> open_store(const Globals& g)
{
    return std::make_unique<store::Store>(require_config(g).store);
}

std::vector<std::string> read_lines(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot read " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(std::move(line));
    return lines;
}

std::optional<Timestamp> parse_time_flag(const std::string& text, const char* flag)
{
    if (text.empty()) return std::nullopt;
    const auto t = Timestamp::parse(text);
    if (!t) throw Error(ErrorCode::InvalidInput, std::string("bad timestamp for ") + flag + ": " + text);
    return t;
}

std::string fixed(double v, int digits)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

void print_metrics(std::ostream& out, const char* label, const ml::Metrics& m)
{
    out << label << ": accuracy=" << fixed(m.accuracy, 4) << " precision=" << fixed(m.precision, 4)
        << " recall=" << fixed(m.recall, 4) << " f1=" << fixed(m.f1, 4) << " auc=" << fixed(m.auc, 4)
        << " tp=" << m.confusion.true_positive << " fp=" << m.confusion.false_positive
        << " tn=" << m.confusion.true_negative << " fn=" << m.confusion.false_negative << '\n';
}

void print_stats(std::ostream& out, const json& d)
{
    const auto& th = d.at("time_histogram");
    out << "range " << th.at("from").get<std::string>() << " .. " << th.at("to").get<std::string>()
        << "  alerts " << th.at("total").get<std::uint64_t>() << '\n';
    out << "domain";
    for (const auto& [k, v] : d.at("domain_counts").items()) out << "  " << k << '=' << v.get<std::uint64_t>();
    out << "\nseverity";
    for (const char* s : {"info", "low", "medium", "high"}) {
        out << "  " << s << '=' << d.at("severity_counts").at(s).get<std::uint64_t>();
    }
    const auto& ph = d.at("probability_histogram");
    out << "\nprobability  scored=" << ph.at("scored").get<std::uint64_t>()
        << "  mean=" << fixed(ph.at("mean").get<double>(), 4) << '\n';
    const double width = ph.at("bucket_width").get<double>();
    const auto& counts = ph.at("counts");
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const bool last = i + 1 == counts.size();
        out << "  [" << fixed(width * static_cast<double>(i), 1) << ", " << fixed(width * static_cast<double>(i + 1), 1)
            << (last ? "]" : ")") << ' ' << counts[i].get<std::uint64_t>() << '\n';
    }
    const auto& g = d.at("gauge");
    out << "gauge  " << g.at("current").get<std::uint64_t>() << '/' << g.at("threshold").get<std::uint64_t>()
        << " in last " << g.at("window_seconds").get<std::int64_t>() << "s  " << g.at("state").get<std::string>()
        << '\n';
    out << "daily\n";
    for (const auto& b : th.at("buckets")) {
        const auto n = b.at("count").get<std::uint64_t>();
        if (n == 0) continue;
        out << "  " << b.at("start").get<std::string>().substr(0, 10) << ' ' << n << '\n';
    }
}

int exit_code_for(ErrorCode code)
{
    return code == ErrorCode::StoreUnavailable ? kExitEnvironment : kExitInput;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Security event correlation, alert scoring and investigation store", "invscope"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Config file (default: $INVSCOPE_CONFIG)");
    app.add_option("--store", g.store_path, "Data directory; overrides the config file");

    std::function<void()> action;

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse raw records into the store");
    std::string ingest_format;
    std::string ingest_input;
    ingest_cmd->add_option("--format", ingest_format, "ids-kv | access-json | canonical")->required();
    ingest_cmd->add_option("--input", ingest_input, "Input file, or - for stdin")->required();
    ingest_cmd->callback([&] {
        action = [&] {
            const auto format = ingest::parse_format(ingest_format);
            if (!format) throw Error(ErrorCode::InvalidInput, "unknown format " + ingest_format);
            auto store = open_store(g);
            std::ifstream file;
            std::istream* in = &std::cin;
            if (ingest_input != "-") {
                file.open(ingest_input, std::ios::binary);
                if (!file) throw Error(ErrorCode::NotFound, "cannot read " + ingest_input);
                in = &file;
            }
            const auto report = ingest::ingest_batch(*in, *format, *store);
            out << "accepted " << report.accepted << "  duplicates " << report.duplicates_skipped << "  rejected "
                << report.rejected << '\n';
            for (const auto& r : report.rejects) out << "  line " << r.line_number << ": " << r.reason << '\n';
            if (report.storage_error) throw Error(ErrorCode::StoreUnavailable, *report.storage_error);
        };
    });

    // correlate
    auto* correlate_cmd = app.add_subcommand("correlate", "Run correlation rules over events");
    std::string rules_path;
    std::string events_path;
    std::string alerts_out;
    correlate_cmd->add_option("--rules", rules_path, "Rule file (default: built-in rules)");
    correlate_cmd->add_option("--events", events_path, "Canonical event JSONL (default: events in the store)");
    correlate_cmd->add_option("--out", alerts_out, "Write alerts as JSONL instead of storing them");
    correlate_cmd->callback([&] {
        action = [&] {
            std::optional<fs::path> rp;
            if (!rules_path.empty()) rp = rules_path;
            else if (auto c = resolve_config(g); c && c->rules_path) rp = c->rules_path;
            const auto rules = load_rules(rp);

            std::vector<Event> events;
            std::unique_ptr<store::Store> store;
            if (!events_path.empty()) {
                std::size_t n = 0;
                for (const auto& line : read_lines(events_path)) {
                    ++n;
                    if (ingest::is_blank(line)) continue;
                    auto parsed = ingest::parse_canonical_line(line);
                    if (auto* e = std::get_if<Event>(&parsed)) events.push_back(std::move(*e));
                    else throw Error(ErrorCode::InvalidInput, events_path + ":" + std::to_string(n) + ": " +
                                                                  std::get<ingest::Rejection>(parsed).reason);
                }
            }
            if (events_path.empty() || alerts_out.empty()) {
                store = open_store(g);
                if (events_path.empty()) events = store->events();
            }
            std::stable_sort(events.begin(), events.end(),
                             [](const Event& a, const Event& b) { return a.occurred_at < b.occurred_at; });
            const auto alerts = correlation::evaluate_stream(events, rules);
            if (!alerts_out.empty()) {
                std::ofstream file(alerts_out, std::ios::binary | std::ios::trunc);
                if (!file) throw Error(ErrorCode::InvalidInput, "cannot write " + alerts_out);
                for (const auto& a : alerts) file << encode_line(a) << '\n';
                out << "alerts " << alerts.size() << " written to " << alerts_out << '\n';
            } else {
                const auto stored = store->put_alerts(alerts);
                out << "alerts " << alerts.size() << "  new " << stored << '\n';
            }
        };
    });

    // label
    auto* label_cmd = app.add_subcommand("label", "Import classifications (IMP records or ground truth)");
    std::string classifications_path;
    std::string truth_path;
    auto* cls_opt = label_cmd->add_option("--classifications", classifications_path, "IMP classification JSONL");
    auto* truth_opt = label_cmd->add_option("--ground-truth", truth_path, "Scenario ground truth JSONL");
    cls_opt->excludes(truth_opt);
    label_cmd->callback([&] {
        action = [&] {
            if (classifications_path.empty() && truth_path.empty()) {
                throw Error(ErrorCode::InvalidInput, "label needs --classifications or --ground-truth");
            }
            auto store = open_store(g);
            std::vector<std::string> lines;
            if (!classifications_path.empty()) {
                lines = read_lines(classifications_path);
            } else {
                const auto truth = scenario::read_ground_truth(truth_path);
                const auto alerts = store->alerts();
                const auto events = store->events();
                for (const auto& i : scenario::label_alerts(alerts, events, truth)) {
                    lines.push_back(sync::classification_record(i).dump());
                }
            }
            const auto r = sync::import_classifications(*store, lines);
            out << "read " << r.read << "  accepted " << r.accepted << "  duplicates " << r.duplicates
                << "  rejects " << r.rejects << '\n';
        };
    });

    // train
    auto* train_cmd = app.add_subcommand("train", "Train an incident-probability model");
    std::string algo = "logreg";
    std::string data_path;
    std::string model_out;
    std::uint64_t seed = 7;
    train_cmd->add_option("--algo", algo, "logreg | forest")->check(CLI::IsMember({"logreg", "forest"}));
    train_cmd->add_option("--data", data_path, "Labeled dataset JSONL (default: build from the store)");
    train_cmd->add_option("--seed", seed, "Split and training seed");
    train_cmd->add_option("--out", model_out, "Model file")->required();
    train_cmd->callback([&] {
        action = [&] {
            ml::LabeledDataset ds;
            if (!data_path.empty()) {
                ds = ml::read_dataset(data_path);
            } else {
                auto store = open_store(g);
                std::vector<std::string> skipped;
                ds = ml::build_dataset(*store, &skipped);
                for (const auto& id : skipped) err << "warning: alert " << id << " has unresolved events\n";
            }
            out << "rows " << ds.size() << "  positives " << ds.positives() << '\n';
            auto run = algo == "forest" ? ml::train_forest_run(ds, seed) : ml::train_logreg_run(ds, seed);
            run.model.save(model_out);
            out << "model " << run.model.model_id() << " written to " << model_out << '\n';
            print_metrics(out, "validation", run.validation);
            print_metrics(out, "test", run.test);
        };
    });

    // score
    auto* score_cmd = app.add_subcommand("score", "Score alerts that the model has not seen");
    std::string model_path;
    score_cmd->add_option("--model", model_path, "Model file")->required();
    score_cmd->callback([&] {
        action = [&] {
            const auto model = ml::Model::load(model_path);
            auto store = open_store(g);
            const auto report = ml::score_pending(*store, model, Timestamp::now());
            out << "scored " << report.scored << "  skipped " << report.skipped.size() << '\n';
            for (const auto& s : report.skipped) out << "  " << s.alert_id << ": " << s.reason << '\n';
        };
    });

    // sync
    auto* sync_cmd = app.add_subcommand("sync", "Run the synchronization mechanism");
    bool once = false;
    sync_cmd->add_flag("--once", once, "Run a single cycle and exit")->required();
    sync_cmd->callback([&] {
        action = [&] {
            Service service(require_config(g));
            for (const auto& w : service.warnings()) err << "warning: " << w << '\n';
            const auto report = service.sync().run_cycle(sync::Trigger::Manual);
            out << sync::to_json(report).dump(2) << '\n';
            if (report.error) throw Error(ErrorCode::StoreUnavailable, *report.error);
        };
    });

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the scheduler and the HTTP API");
    std::string listen;
    serve_cmd->add_option("--listen", listen, "host:port (default from config)");
    serve_cmd->callback([&] {
        action = [&] {
            Service service(require_config(g));
            for (const auto& w : service.warnings()) err << "warning: " << w << '\n';
            const auto [host, port] = parse_listen(listen.empty() ? service.config().listen : listen);
            if (service.config().tokens.empty()) err << "warning: no api tokens configured; every route but health answers 401\n";
            api::StaticTokens auth(service.config().tokens);
            api::ApiHandler handler(service.store(), auth, service.hooks());
            api::HttpServer server(handler, service.config().static_dir);
            const int bound = server.bind(host, port);
            out << "listening on " << host << ':' << bound << std::endl;

            g_stop = false;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            service.scheduler().start();
            std::thread http([&] { server.serve(); });
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            server.stop();
            http.join();
            service.scheduler().stop();
            out << "stopped" << std::endl;
        };
    });

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Generate a labeled synthetic event stream");
    std::string spec_path;
    std::string out_dir;
    std::string gen_rules;
    gen_cmd->add_option("--spec", spec_path, "Scenario spec JSON (default: the benchmark spec)");
    gen_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
    gen_cmd->add_option("--rules", gen_rules, "Rules used for labeling (default: built-in rules)");
    gen_cmd->callback([&] {
        action = [&] {
            scenario::ScenarioSpec spec = scenario::benchmark_spec();
            if (!spec_path.empty()) {
                std::ifstream in(spec_path, std::ios::binary);
                if (!in) throw Error(ErrorCode::NotFound, "cannot read " + spec_path);
                const json j = json::parse(in, nullptr, false);
                if (j.is_discarded()) throw Error(ErrorCode::InvalidInput, spec_path + " is not valid JSON");
                spec = scenario::spec_from_json(j);
            }
            const auto rules = load_rules(gen_rules.empty() ? std::nullopt : std::optional<fs::path>(gen_rules));
            const auto generated = scenario::generate(spec);
            const auto s = scenario::write_outputs(generated, rules, out_dir);
            out << "events " << s.events << "  scenarios " << s.scenarios << "  alerts " << s.alerts
                << "  confirmed " << s.confirmed << '\n';
        };
    });

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Print the alerts dashboard as text");
    std::string from_text;
    std::string to_text;
    std::string domain_text;
    stats_cmd->add_option("--from", from_text, "Range start (default: 60 days before --to)");
    stats_cmd->add_option("--to", to_text, "Range end, exclusive (default: end of today)");
    stats_cmd->add_option("--domain", domain_text, "cyber | physical");
    stats_cmd->callback([&] {
        action = [&] {
            store::AlertFilter f;
            f.from = parse_time_flag(from_text, "--from");
            f.to = parse_time_flag(to_text, "--to");
            if (!domain_text.empty()) {
                f.domain = parse_domain(domain_text);
                if (!f.domain) throw Error(ErrorCode::InvalidInput, "unknown domain " + domain_text);
            }
            const Config config = require_config(g);
            store::Store store(config.store);
            Settings settings = config.settings;
            if (const json saved = store.meta().settings; saved.is_object() && !saved.empty()) {
                settings = merge_settings(settings, saved);
            }
            print_stats(out, api::dashboard(store, f, settings, Timestamp::now()));
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitInput;
    }

    try {
        if (action) action();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitEnvironment;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitEnvironment;
    }
}

}  // namespace invscope
