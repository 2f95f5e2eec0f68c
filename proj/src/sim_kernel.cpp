#include "openvlc/sim_kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace openvlc::sim {

const char* to_string(EventKind kind)
{
    switch (kind) {
    case EventKind::Timer: return "timer";
    case EventKind::SymbolBoundary: return "symbol_boundary";
    case EventKind::ModeSwitch: return "mode_switch";
    case EventKind::AckTimeout: return "ack_timeout";
    case EventKind::TrafficArrival: return "traffic_arrival";
    case EventKind::EmissionStart: return "emission_start";
    case EventKind::EmissionEnd: return "emission_end";
    case EventKind::SenseWindowEnd: return "sense_window_end";
    case EventKind::Processing: return "processing";
    }
    return "unknown";
}

EventHandle Scheduler::schedule(Duration delay, std::int64_t target, EventKind kind, std::function<void()> action)
{
    if (delay < Duration::zero()) {
        throw Error(Errc::InvalidArgument, "Scheduler::schedule: negative delay");
    }
    return schedule_at(now_ + delay, target, kind, std::move(action));
}

EventHandle Scheduler::schedule_at(SimTime when, std::int64_t target, EventKind kind, std::function<void()> action)
{
    if (when < now_) {
        throw Error(Errc::InvalidArgument, "Scheduler::schedule_at: time is in the past");
    }
    const std::uint64_t seq = next_seq_++;
    queue_.push(SimEvent{when, seq, target, kind, std::move(action)});
    live_.insert(seq);
    return EventHandle{seq};
}

bool Scheduler::cancel(EventHandle handle)
{
    if (!handle.valid() || live_.erase(handle.seq) == 0) {
        return false;
    }
    cancelled_.insert(handle.seq);
    return true;
}

std::size_t Scheduler::run_until(SimTime t_end)
{
    std::size_t dispatched = 0;
    while (!queue_.empty() && queue_.top().fire_at <= t_end) {
        SimEvent event = queue_.top();
        queue_.pop();
        if (cancelled_.erase(event.seq) > 0) {
            continue;
        }
        live_.erase(event.seq);
        now_ = event.fire_at;
        if (record_) {
            log_.push_back(DispatchRecord{event.fire_at, event.seq, event.target, event.kind});
        }
        ++dispatched;
        if (event.action) {
            event.action();
        }
    }
    if (t_end > now_) {
        now_ = t_end;
    }
    return dispatched;
}

std::uint64_t derive_seed(std::uint64_t root_seed, std::uint64_t node, RngPurpose purpose)
{
    auto splitmix = [](std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    };
    std::uint64_t h = splitmix(root_seed);
    h = splitmix(h ^ (node * 0x100000001B3ull));
    h = splitmix(h ^ static_cast<std::uint64_t>(purpose));
    return h;
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi)
{
    if (hi < lo) {
        throw Error(Errc::InvalidArgument, "RngStream::uniform_int: empty range");
    }
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) {
        return static_cast<std::int64_t>(engine_());
    }
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % span);
    std::uint64_t draw;
    do {
        draw = engine_();
    } while (draw >= limit);
    return lo + static_cast<std::int64_t>(draw % span);
}

double RngStream::uniform01()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal(double mean, double stddev)
{
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    double u1;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + stddev * radius * std::cos(angle);
}

}  // namespace openvlc::sim
