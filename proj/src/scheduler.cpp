#include "invscope/error.hpp"
#include "invscope/sync.hpp"

namespace invscope::sync {

Scheduler::Scheduler(Cycle cycle, std::chrono::milliseconds interval)
    : cycle_(std::move(cycle)), interval_(interval)
{
    if (interval.count() <= 0) throw Error(ErrorCode::InvalidInput, "scheduler interval must be positive");
}

Scheduler::~Scheduler() { stop(); }

void Scheduler::start()
{
    std::lock_guard lock(mu_);
    if (running_) return;
    stop_requested_ = false;
    running_ = true;
    thread_ = std::thread([this] { loop(); });
}

void Scheduler::stop()
{
    {
        std::lock_guard lock(mu_);
        stop_requested_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
    running_ = false;
}

void Scheduler::set_interval(std::chrono::milliseconds interval)
{
    if (interval.count() <= 0) throw Error(ErrorCode::InvalidInput, "scheduler interval must be positive");
    {
        std::lock_guard lock(mu_);
        interval_ = interval;
    }
    cv_.notify_all();
}

std::chrono::milliseconds Scheduler::interval() const
{
    std::lock_guard lock(mu_);
    return interval_;
}

std::optional<SyncReport> Scheduler::last_report() const
{
    std::lock_guard lock(mu_);
    return last_report_;
}

std::optional<SyncReport> Scheduler::run_guarded(Trigger trigger)
{
    std::unique_lock cycle_lock(cycle_mu_, std::try_to_lock);
    if (!cycle_lock.owns_lock()) return std::nullopt;
    in_cycle_ = true;
    std::optional<SyncReport> report;
    try {
        report = cycle_(trigger);
    } catch (...) {
        in_cycle_ = false;
        throw;
    }
    in_cycle_ = false;
    ++completed_;
    std::lock_guard lock(mu_);
    last_report_ = report;
    return report;
}

std::optional<SyncReport> Scheduler::trigger_manual() { return run_guarded(Trigger::Manual); }

void Scheduler::loop()
{
    auto next_tick = Clock::now();
    std::unique_lock lock(mu_);
    while (!stop_requested_) {
        if (cv_.wait_until(lock, next_tick, [this] { return stop_requested_; })) break;
        lock.unlock();
        std::optional<SyncReport> report;
        try {
            report = run_guarded(Trigger::Scheduled);
        } catch (const std::exception&) {
            // The cycle records store faults in its report; anything else is
            // dropped so the schedule keeps running.
            report = SyncReport{};
        }
        lock.lock();
        if (!report) ++skipped_;
        next_tick += interval_;
        // Ticks that passed while the cycle ran are skipped, not queued.
        const auto now = Clock::now();
        while (next_tick <= now) {
            ++skipped_;
            next_tick += interval_;
        }
    }
}

}  // namespace invscope::sync
