#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "openvlc/common.hpp"

namespace openvlc::sim {

enum class EventKind : std::uint8_t {
    Timer,
    SymbolBoundary,
    ModeSwitch,
    AckTimeout,
    TrafficArrival,
    EmissionStart,
    EmissionEnd,
    SenseWindowEnd,
    Processing,
};

const char* to_string(EventKind kind);

inline constexpr std::int64_t kChannelTarget = -1;

struct SimEvent {
    SimTime fire_at{};
    std::uint64_t seq = 0;
    std::int64_t target = kChannelTarget;  // node index, or kChannelTarget
    EventKind kind = EventKind::Timer;
    std::function<void()> action;
};

struct EventHandle {
    std::uint64_t seq = 0;

    bool valid() const noexcept { return seq != 0; }
};

struct DispatchRecord {
    SimTime fire_at{};
    std::uint64_t seq = 0;
    std::int64_t target = 0;
    EventKind kind = EventKind::Timer;

    friend bool operator==(const DispatchRecord&, const DispatchRecord&) = default;
};

/// Totally ordered event queue keyed by (fire_at, seq). Single-threaded.
class Scheduler {
public:
    SimTime now() const noexcept { return now_; }

    EventHandle schedule(Duration delay, std::int64_t target, EventKind kind, std::function<void()> action);
    EventHandle schedule_at(SimTime when, std::int64_t target, EventKind kind, std::function<void()> action);

    /// Returns true if the event was pending and is now cancelled.
    bool cancel(EventHandle handle);

    /// Dispatches every event with fire_at <= t_end; the clock ends at t_end.
    std::size_t run_until(SimTime t_end);

    std::size_t pending() const noexcept { return queue_.size() - cancelled_.size(); }

    /// When enabled, every dispatched event is appended to the dispatch log.
    void record_dispatches(bool enabled) { record_ = enabled; }
    const std::vector<DispatchRecord>& dispatch_log() const noexcept { return log_; }

private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const
        {
            if (a.fire_at != b.fire_at) {
                return a.fire_at > b.fire_at;
            }
            return a.seq > b.seq;
        }
    };

    SimTime now_{0};
    std::uint64_t next_seq_ = 1;
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
    std::unordered_set<std::uint64_t> cancelled_;
    std::unordered_set<std::uint64_t> live_;
    bool record_ = false;
    std::vector<DispatchRecord> log_;
};

enum class RngPurpose : std::uint64_t { Backoff = 1, Noise = 2, Traffic = 3 };

/// SplitMix64 mix of (root, node, purpose); decorrelates neighbouring seeds.
std::uint64_t derive_seed(std::uint64_t root_seed, std::uint64_t node, RngPurpose purpose);

/// A reproducible random stream. The engine is the standard-specified
/// mt19937_64; the distributions are implemented here so the drawn values are
/// identical on every standard library.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : engine_(seed) {}
    RngStream(std::uint64_t root_seed, std::uint64_t node, RngPurpose purpose)
        : engine_(derive_seed(root_seed, node, purpose))
    {
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [lo, hi] by rejection sampling.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Uniform real in [0, 1) with 53 bits of resolution.
    double uniform01();

    /// Box-Muller; the second variate is cached.
    double normal(double mean, double stddev);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace openvlc::sim
