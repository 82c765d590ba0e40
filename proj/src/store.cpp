#include "invscope/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>

#include "invscope/error.hpp"
#include "invscope/id.hpp"

namespace invscope::store {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEventsLog = "events.log";
constexpr const char* kAlertsLog = "alerts.log";
constexpr const char* kIncidentsLog = "incidents.log";
constexpr const char* kScoresLog = "scores.log";
constexpr const char* kMetaFile = "meta.json";

class FileDescriptor {
public:
    explicit FileDescriptor(int fd) : fd_(fd) {}
    ~FileDescriptor()
    {
        if (fd_ >= 0) ::close(fd_);
    }
    FileDescriptor(const FileDescriptor&) = delete;
    FileDescriptor& operator=(const FileDescriptor&) = delete;

    int get() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

private:
    int fd_;
};

bool write_all(int fd, std::string_view bytes)
{
    while (!bytes.empty()) {
        const ssize_t n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json tagged(std::string_view type, json data) { return json{{"type", type}, {"data", std::move(data)}}; }

[[noreturn]] void unavailable(const std::string& what) { throw Error(ErrorCode::StoreUnavailable, what); }

}  // namespace

Store::Store(fs::path dir) : dir_(std::move(dir))
{
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) unavailable("cannot create data directory " + dir_.string());
    replay();
}

Store::~Store() = default;

void Store::replay()
{
    const fs::path meta_path = dir_ / kMetaFile;
    if (fs::exists(meta_path)) {
        try {
            const json m = json::parse(read_file(meta_path));
            meta_.format_version = m.value("format_version", 1);
            const json marks = m.value("watermarks", json::object());
            for (const auto& [name, wm] : marks.items()) {
                meta_.watermarks[name] = Watermark{wm.at("file").get<std::string>(), wm.at("offset").get<std::uint64_t>()};
            }
            meta_.settings = m.value("settings", json::object());
        } catch (const json::exception& e) {
            unavailable(std::string("corrupt meta.json: ") + e.what());
        }
    }

    replay_log(kEventsLog, [this](const json& r) {
        if (r.at("type") == "event") apply_event(event_from_json(r.at("data")));
    });
    replay_log(kAlertsLog, [this](const json& r) {
        if (r.at("type") == "alert") {
            apply_alert(alert_from_json(r.at("data")));
        } else if (r.at("type") == "alert_status") {
            const auto status = parse_status(r.at("data").at("status").get<std::string>());
            if (status) apply_status(r.at("data").at("id").get<std::string>(), *status);
        }
    });
    replay_log(kIncidentsLog, [this](const json& r) {
        if (r.at("type") == "incident") apply_incident(incident_from_json(r.at("data")));
    });
    replay_log(kScoresLog, [this](const json& r) {
        if (r.at("type") == "score") apply_score(score_from_json(r.at("data")));
    });
}

std::size_t Store::replay_log(const std::string& name, const std::function<void(const json&)>& apply)
{
    const fs::path path = dir_ / name;
    if (!fs::exists(path)) return 0;
    const std::string buf = read_file(path);

    std::size_t pos = 0;
    std::size_t records = 0;
    while (pos < buf.size()) {
        const std::size_t tab = buf.find('\t', pos);
        if (tab == std::string::npos) break;
        std::size_t len = 0;
        bool ok = tab > pos && tab - pos <= 12;
        for (std::size_t i = pos; ok && i < tab; ++i) {
            ok = buf[i] >= '0' && buf[i] <= '9';
            len = len * 10 + static_cast<std::size_t>(buf[i] - '0');
        }
        const std::size_t end = tab + 1 + len;
        if (!ok || end >= buf.size() || buf[end] != '\n') break;
        try {
            apply(json::parse(std::string_view(buf).substr(tab + 1, len)));
        } catch (const std::exception&) {
            break;
        }
        ++records;
        pos = end + 1;
    }
    if (pos < buf.size()) {
        // Torn or corrupt tail: keep the durable prefix only.
        std::error_code ec;
        fs::resize_file(path, pos, ec);
        if (ec) unavailable("cannot truncate torn tail of " + path.string());
    }
    return records;
}

void Store::append(const std::string& log_name, const std::vector<std::string>& records)
{
    std::string buf;
    for (const auto& r : records) {
        buf += std::to_string(r.size());
        buf += '\t';
        buf += r;
        buf += '\n';
    }

    auto crash = [&](FaultPoint p) { return fault_hook_ && fault_hook_(p, log_name); };

    if (crash(FaultPoint::BeforeAppend)) {
        broken_ = true;
        unavailable("simulated crash before append to " + log_name);
    }
    FileDescriptor fd(::open((dir_ / log_name).c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644));
    if (!fd.valid()) {
        broken_ = true;
        unavailable("cannot open " + log_name + ": " + std::strerror(errno));
    }
    if (crash(FaultPoint::TornAppend)) {
        write_all(fd.get(), std::string_view(buf).substr(0, buf.size() / 2));
        ::fsync(fd.get());
        broken_ = true;
        unavailable("simulated torn write to " + log_name);
    }
    if (!write_all(fd.get(), buf) || ::fsync(fd.get()) != 0) {
        broken_ = true;
        unavailable("write to " + log_name + " failed: " + std::strerror(errno));
    }
    if (crash(FaultPoint::AfterAppend)) {
        broken_ = true;
        unavailable("simulated crash after append to " + log_name);
    }
}

void Store::ensure_available() const
{
    if (broken_) unavailable("store is unavailable after a failed write; reopen it");
}

void Store::apply_event(Event e)
{
    if (event_by_id_.contains(e.id)) return;
    std::string key = dedup_key(e.source_id, e.native_ref);
    if (event_by_ref_.contains(key)) return;
    const std::size_t idx = events_.size();
    event_by_id_.emplace(e.id, idx);
    event_by_ref_.emplace(std::move(key), idx);
    events_.push_back(std::move(e));
}

void Store::apply_alert(Alert a)
{
    if (alert_by_id_.contains(a.id)) return;
    const std::size_t idx = alerts_.size();
    alert_by_id_.emplace(a.id, idx);
    alerts_by_time_.emplace(a.raised_at, idx);
    alerts_.push_back(std::move(a));
}

void Store::apply_status(const std::string& id, AlertStatus s)
{
    const auto it = alert_by_id_.find(id);
    // Closed is terminal.
    if (it != alert_by_id_.end() && alerts_[it->second].status == AlertStatus::Open) alerts_[it->second].status = s;
}

void Store::apply_incident(Incident i)
{
    if (incident_by_alert_.contains(i.alert_id)) return;
    incident_by_alert_.emplace(i.alert_id, incidents_.size());
    // A classified alert is closed; derived here so replay needs no status record.
    apply_status(i.alert_id, AlertStatus::Closed);
    incidents_.push_back(std::move(i));
}

void Store::apply_score(MlScore s)
{
    auto& per_model = scores_by_alert_[s.alert_id];
    if (per_model.contains(s.model_id)) return;
    per_model.emplace(s.model_id, scores_.size());
    scores_.push_back(std::move(s));
}

std::size_t Store::put_events(std::span<const Event> events)
{
    std::unique_lock lock(mu_);
    ensure_available();
    std::vector<const Event*> fresh;
    std::unordered_map<std::string, bool> batch_keys;
    for (const Event& e : events) {
        const auto violations = validate_event(e);
        if (!violations.empty()) {
            throw Error(ErrorCode::InvalidInput, "invalid event " + e.id + ": " + violations.front().code);
        }
        std::string key = dedup_key(e.source_id, e.native_ref);
        if (event_by_id_.contains(e.id) || event_by_ref_.contains(key)) continue;
        if (!batch_keys.emplace(e.id, true).second || !batch_keys.emplace(std::move(key), true).second) continue;
        fresh.push_back(&e);
    }
    if (fresh.empty()) return 0;

    std::vector<std::string> records;
    records.reserve(fresh.size());
    for (const Event* e : fresh) records.push_back(tagged("event", to_json(*e)).dump());
    append(kEventsLog, records);
    for (const Event* e : fresh) apply_event(*e);
    return fresh.size();
}

std::size_t Store::put_alerts(std::span<const Alert> alerts)
{
    std::unique_lock lock(mu_);
    ensure_available();
    std::vector<const Alert*> fresh;
    std::unordered_map<std::string, bool> batch_ids;
    for (const Alert& a : alerts) {
        const auto violations = validate_alert(a);
        if (!violations.empty()) {
            throw Error(ErrorCode::InvalidInput, "invalid alert " + a.id + ": " + violations.front().code);
        }
        for (const auto& eid : a.event_ids) {
            const auto it = event_by_id_.find(eid);
            if (it == event_by_id_.end()) {
                throw Error(ErrorCode::Referential, "alert " + a.id + " references unknown event " + eid);
            }
            if (events_[it->second].occurred_at > a.raised_at) {
                throw Error(ErrorCode::InvalidInput, "alert " + a.id + " raised before its event " + eid);
            }
        }
        if (alert_by_id_.contains(a.id) || !batch_ids.emplace(a.id, true).second) continue;
        fresh.push_back(&a);
    }
    if (fresh.empty()) return 0;

    std::vector<std::string> records;
    for (const Alert* a : fresh) records.push_back(tagged("alert", to_json(*a)).dump());
    append(kAlertsLog, records);
    for (const Alert* a : fresh) apply_alert(*a);
    return fresh.size();
}

void Store::put_incident(const Incident& incident)
{
    std::unique_lock lock(mu_);
    ensure_available();
    const auto it = alert_by_id_.find(incident.alert_id);
    if (it == alert_by_id_.end()) {
        throw Error(ErrorCode::Referential, "incident references unknown alert " + incident.alert_id);
    }
    if (incident_by_alert_.contains(incident.alert_id)) {
        throw Error(ErrorCode::Conflict, "alert " + incident.alert_id + " is already classified");
    }
    const Alert& alert = alerts_[it->second];
    if (incident.classified_at < alert.raised_at) {
        throw Error(ErrorCode::InvalidInput, "incident classified before its alert was raised");
    }
    if (incident.id.empty() || incident.classified_by.empty()) {
        throw Error(ErrorCode::InvalidInput, "incident id and classified_by are required");
    }

    append(kIncidentsLog, {tagged("incident", to_json(incident)).dump()});
    apply_incident(incident);
}

void Store::close_alert(std::string_view alert_id)
{
    std::unique_lock lock(mu_);
    ensure_available();
    const auto it = alert_by_id_.find(std::string(alert_id));
    if (it == alert_by_id_.end()) throw Error(ErrorCode::NotFound, "unknown alert " + std::string(alert_id));
    if (alerts_[it->second].status == AlertStatus::Closed) return;
    append(kAlertsLog, {tagged("alert_status", json{{"id", alert_id}, {"status", "closed"}}).dump()});
    apply_status(std::string(alert_id), AlertStatus::Closed);
}

std::size_t Store::put_scores(std::span<const MlScore> scores)
{
    std::unique_lock lock(mu_);
    ensure_available();
    std::vector<const MlScore*> fresh;
    std::map<std::pair<std::string, std::string>, bool> batch_keys;
    for (const MlScore& s : scores) {
        if (!alert_by_id_.contains(s.alert_id)) {
            throw Error(ErrorCode::Referential, "score references unknown alert " + s.alert_id);
        }
        if (!(s.probability >= 0.0 && s.probability <= 1.0)) {
            throw Error(ErrorCode::InvalidInput, "probability outside [0,1]");
        }
        const auto per = scores_by_alert_.find(s.alert_id);
        if (per != scores_by_alert_.end() && per->second.contains(s.model_id)) continue;
        if (!batch_keys.emplace(std::make_pair(s.alert_id, s.model_id), true).second) continue;
        fresh.push_back(&s);
    }
    if (fresh.empty()) return 0;

    std::vector<std::string> records;
    for (const MlScore* s : fresh) records.push_back(tagged("score", to_json(*s)).dump());
    append(kScoresLog, records);
    for (const MlScore* s : fresh) apply_score(*s);
    return fresh.size();
}

std::optional<Event> Store::find_event(std::string_view id) const
{
    std::shared_lock lock(mu_);
    const auto it = event_by_id_.find(std::string(id));
    if (it == event_by_id_.end()) return std::nullopt;
    return events_[it->second];
}

std::optional<Event> Store::find_event_by_ref(std::string_view source_id, std::string_view native_ref) const
{
    std::shared_lock lock(mu_);
    const auto it = event_by_ref_.find(dedup_key(source_id, native_ref));
    if (it == event_by_ref_.end()) return std::nullopt;
    return events_[it->second];
}

std::optional<Alert> Store::find_alert(std::string_view id) const
{
    std::shared_lock lock(mu_);
    const auto it = alert_by_id_.find(std::string(id));
    if (it == alert_by_id_.end()) return std::nullopt;
    return alerts_[it->second];
}

std::optional<Incident> Store::incident_for(std::string_view alert_id) const
{
    std::shared_lock lock(mu_);
    const auto it = incident_by_alert_.find(std::string(alert_id));
    if (it == incident_by_alert_.end()) return std::nullopt;
    return incidents_[it->second];
}

std::optional<MlScore> Store::current_score(std::string_view alert_id) const
{
    std::shared_lock lock(mu_);
    const auto it = scores_by_alert_.find(std::string(alert_id));
    if (it == scores_by_alert_.end()) return std::nullopt;
    const MlScore* best = nullptr;
    for (const auto& [model, idx] : it->second) {
        const MlScore& s = scores_[idx];
        if (!best || s.scored_at > best->scored_at) best = &s;
    }
    return best ? std::optional<MlScore>(*best) : std::nullopt;
}

std::optional<double> Store::current_probability(const std::string& alert_id) const
{
    const auto it = scores_by_alert_.find(alert_id);
    if (it == scores_by_alert_.end()) return std::nullopt;
    const MlScore* best = nullptr;
    for (const auto& [model, idx] : it->second) {
        const MlScore& s = scores_[idx];
        if (!best || s.scored_at > best->scored_at) best = &s;
    }
    return best ? std::optional<double>(best->probability) : std::nullopt;
}

bool Store::has_score(std::string_view alert_id, std::string_view model_id) const
{
    std::shared_lock lock(mu_);
    const auto it = scores_by_alert_.find(std::string(alert_id));
    return it != scores_by_alert_.end() && it->second.find(model_id) != it->second.end();
}

std::vector<Event> Store::events() const
{
    std::shared_lock lock(mu_);
    return events_;
}

std::vector<Alert> Store::alerts() const
{
    std::shared_lock lock(mu_);
    return alerts_;
}

std::vector<Incident> Store::incidents() const
{
    std::shared_lock lock(mu_);
    return incidents_;
}

std::vector<MlScore> Store::scores() const
{
    std::shared_lock lock(mu_);
    return scores_;
}

std::size_t Store::event_count() const
{
    std::shared_lock lock(mu_);
    return events_.size();
}

std::size_t Store::alert_count() const
{
    std::shared_lock lock(mu_);
    return alerts_.size();
}

Meta Store::meta() const
{
    std::shared_lock lock(mu_);
    return meta_;
}

void Store::write_meta_locked()
{
    if (fault_hook_ && fault_hook_(FaultPoint::BeforeMetaWrite, kMetaFile)) {
        broken_ = true;
        unavailable("simulated crash before meta write");
    }
    json m{{"format_version", meta_.format_version}, {"watermarks", json::object()}, {"settings", meta_.settings}};
    for (const auto& [name, wm] : meta_.watermarks) m["watermarks"][name] = {{"file", wm.file}, {"offset", wm.offset}};
    const std::string text = m.dump(2) + "\n";

    const fs::path tmp = dir_ / "meta.json.tmp";
    {
        FileDescriptor fd(::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
        if (!fd.valid() || !write_all(fd.get(), text) || ::fsync(fd.get()) != 0) {
            broken_ = true;
            unavailable("cannot write meta.json");
        }
    }
    std::error_code ec;
    fs::rename(tmp, dir_ / kMetaFile, ec);
    if (ec) {
        broken_ = true;
        unavailable("cannot replace meta.json: " + ec.message());
    }
    FileDescriptor dfd(::open(dir_.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC));
    if (dfd.valid()) ::fsync(dfd.get());
}

void Store::set_watermark(const std::string& endpoint, const Watermark& mark)
{
    set_watermarks({{endpoint, mark}});
}

void Store::set_watermarks(const std::map<std::string, Watermark>& marks)
{
    std::unique_lock lock(mu_);
    ensure_available();
    for (const auto& [name, mark] : marks) {
        const auto it = meta_.watermarks.find(name);
        if (it != meta_.watermarks.end() && mark < it->second) {
            throw Error(ErrorCode::Precondition, "watermark for " + name + " would move backwards");
        }
    }
    const Meta previous = meta_;
    for (const auto& [name, mark] : marks) meta_.watermarks[name] = mark;
    try {
        write_meta_locked();
    } catch (...) {
        meta_ = previous;
        throw;
    }
}

void Store::set_settings(const json& settings)
{
    std::unique_lock lock(mu_);
    ensure_available();
    const Meta previous = meta_;
    meta_.settings = settings;
    try {
        write_meta_locked();
    } catch (...) {
        meta_ = previous;
        throw;
    }
}

void Store::set_fault_hook(FaultHook hook)
{
    std::unique_lock lock(mu_);
    fault_hook_ = std::move(hook);
}

bool Store::available() const
{
    std::shared_lock lock(mu_);
    return !broken_;
}

std::uint64_t Store::content_hash() const
{
    std::shared_lock lock(mu_);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char* name : {kEventsLog, kAlertsLog, kIncidentsLog, kScoresLog, kMetaFile}) {
        const fs::path p = dir_ / name;
        const std::string bytes = fs::exists(p) ? read_file(p) : std::string();
        h = fnv1a64(bytes, h ^ fnv1a64(name));
    }
    return h;
}

}  // namespace invscope::store
