#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "openvlc/scenario.hpp"
#include "openvlc/trace.hpp"

namespace openvlc::harness {

struct FlowInfo {
    int id = 0;
    FlowKind kind = FlowKind::Saturation;
    int src = 0;
    int dst = 0;
};

std::vector<FlowInfo> flow_infos(const ScenarioSpec& spec);

struct IntervalSample {
    int flow = 0;
    std::size_t index = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    std::uint64_t bytes = 0;
    double kbps = 0.0;
};

struct RttRecord {
    int flow = 0;
    std::uint32_t seq = 0;
    double submit_s = 0.0;
    double rtt_ms = 0.0;
};

struct FlowSummary {
    int flow = 0;
    FlowKind kind = FlowKind::Saturation;
    std::uint64_t unique_packets = 0;
    std::uint64_t duplicate_packets = 0;
    std::uint64_t delivered_bytes = 0;  // unique datagram payload only
    double mean_kbps = 0.0;             // delivered bits / simulated time
    double median_kbps = 0.0;           // over full reporting intervals
    double min_kbps = 0.0;
    double max_kbps = 0.0;
};

struct PingSummary {
    int flow = 0;
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
    std::uint64_t lost = 0;
    double frac_below_200ms = 0.0;  // over received replies
    double median_rtt_ms = 0.0;
    double p90_rtt_ms = 0.0;
};

struct MetricsReport {
    double t_end_s = 0.0;
    double interval_s = 0.0;
    std::vector<IntervalSample> series;
    std::vector<RttRecord> rtt_records;
    std::vector<FlowSummary> flows;
    std::vector<PingSummary> pings;
    double jain_index = 1.0;  // over non-ping flows' mean throughput
    std::map<std::int64_t, nlohmann::json> counters;

    const FlowSummary* flow(int id) const;
    std::vector<double> flow_series(int id) const;
};

/// Derives everything from the trace alone.
MetricsReport compute_metrics(const std::vector<TraceEvent>& trace, const std::vector<FlowInfo>& flows,
                              Duration interval, SimTime t_end);

/// (sum x)^2 / (n * sum x^2); 1 for an empty or all-zero set.
double jain_index(std::span<const double> xs);

double median(std::vector<double> xs);

/// Nearest-rank percentile, p in [0, 100].
double percentile(std::vector<double> xs, double p);

/// Sorted (value, cumulative fraction) points; the last fraction is 1.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> xs);

nlohmann::json summary_json(const MetricsReport& report, const ScenarioSpec& spec);
std::string metrics_csv(const MetricsReport& report, const std::vector<FlowInfo>& flows);
std::string rtt_csv(const MetricsReport& report);

}  // namespace openvlc::harness
