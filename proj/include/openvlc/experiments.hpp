#pragma once

#include <span>
#include <vector>

#include "openvlc/metrics.hpp"
#include "openvlc/scenario.hpp"
#include "openvlc/trace.hpp"

namespace openvlc::harness {

struct RunResult {
    MetricsReport report;
    std::vector<TraceEvent> trace;
};

/// Builds the network, installs traffic, runs to spec.t_end.
RunResult run_scenario(const ScenarioSpec& spec);

struct SaturationPoint {
    std::size_t payload = 0;
    double kbps = 0.0;           // unique delivered payload bits / simulated time
    double analytic_kbps = 0.0;  // closed-form cycle with the same parameters
};

/// The spec must hold exactly one saturation flow; its payload is replaced
/// by each entry of `payloads`. Points run on up to `workers` threads.
std::vector<SaturationPoint> run_saturation(const ScenarioSpec& spec, std::span<const std::size_t> payloads,
                                            unsigned workers = 1);

/// Uses the spec's first ping flow; the run lasts until every ping had
/// time to complete.
MetricsReport run_ping(const ScenarioSpec& spec, double ipi_s, std::size_t count, std::size_t data_bytes);

/// Every flood flow gets `datagram_bytes`; runs for `duration`.
MetricsReport run_flood(const ScenarioSpec& spec, std::size_t datagram_bytes, Duration duration);

enum class Direction : std::uint8_t { Downlink, Uplink };

/// Three nodes; the first declared node is the hub. Downlink: the hub
/// alternates saturating unicast floods to the other two. Uplink: the other
/// two flood the hub. Datagram size comes from the spec's first flood flow
/// (1000 bytes when there is none). A spec flood flow with the same endpoints
/// lends its id and `enabled` flag to the generated flow.
MetricsReport run_multipoint(const ScenarioSpec& spec, Direction direction);

/// 8P / (N*Ts + delta + T_data + delta + T_ack + 2*proc(coded bytes)).
double analytic_saturation_kbps(const mac::MacParams& mac, Duration switch_latency, std::size_t payload);

struct Calibration {
    Duration proc_overhead_a{};
    Duration proc_overhead_b{};  // per coded byte
};

struct TargetPoint {
    std::size_t payload = 0;
    double kbps = 0.0;
};

/// Fits the affine processing time so the closed-form cycle hits both
/// targets exactly. Error{InvalidArgument} if the fit is not positive.
Calibration calibrate(const mac::MacParams& mac, Duration switch_latency, TargetPoint p1, TargetPoint p2);

}  // namespace openvlc::harness
