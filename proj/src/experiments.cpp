#include "openvlc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "openvlc/network.hpp"
#include "openvlc/traffic.hpp"

namespace openvlc::harness {

namespace {

// Time left after the last ping for its exchange to finish.
constexpr Duration kPingTail = std::chrono::seconds(10);

std::size_t coded_bytes(std::size_t payload)
{
    return frame::coded_byte_count(frame::serialized_size(payload));
}

double cycle_seconds_without_proc(const mac::MacParams& mac, Duration delta, std::size_t payload)
{
    const Duration cycle = mac.symbol_period * mac.basic_sense_symbols + delta + mac.airtime(payload) + delta +
                           mac.airtime(0);
    return to_seconds(cycle);
}

}  // namespace

RunResult run_scenario(const ScenarioSpec& spec)
{
    validate(spec);
    Network net(build_channel_params(spec), build_node_setups(spec), spec.seed);
    TrafficManager traffic(net, spec);
    const SimTime t_end = SimTime{0} + spec.t_end;
    net.run_until(t_end);
    RunResult out;
    out.trace = net.trace();
    out.report = compute_metrics(out.trace, flow_infos(spec), spec.report_interval, t_end);
    return out;
}

std::vector<SaturationPoint> run_saturation(const ScenarioSpec& spec, std::span<const std::size_t> payloads,
                                            unsigned workers)
{
    std::vector<std::size_t> sat;
    for (std::size_t i = 0; i < spec.traffic.size(); ++i) {
        if (spec.traffic[i].enabled && spec.traffic[i].kind == FlowKind::Saturation) {
            sat.push_back(i);
        }
    }
    if (sat.size() != 1) {
        throw Error(Errc::ValidationError, "traffic: run_saturation needs exactly one saturation flow");
    }
    std::vector<SaturationPoint> out(payloads.size());
    auto run_point = [&](std::size_t k) {
        ScenarioSpec s = spec;
        s.traffic = {spec.traffic[sat.front()]};
        s.traffic.front().payload_bytes = payloads[k];
        const auto result = run_scenario(s);
        out[k].payload = payloads[k];
        out[k].kbps = result.report.flows.front().mean_kbps;
        out[k].analytic_kbps = analytic_saturation_kbps(s.mac, s.channel.switch_latency, payloads[k]);
    };

    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(payloads.size())));
    if (workers == 1) {
        for (std::size_t k = 0; k < payloads.size(); ++k) {
            run_point(k);
        }
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < payloads.size(); k = next++) {
                try {
                    run_point(k);
                } catch (...) {
                    if (!failed.exchange(true)) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

MetricsReport run_ping(const ScenarioSpec& spec, double ipi_s, std::size_t count, std::size_t data_bytes)
{
    ScenarioSpec s = spec;
    auto it = std::find_if(s.traffic.begin(), s.traffic.end(),
                           [](const FlowSpec& f) { return f.enabled && f.kind == FlowKind::Ping; });
    if (it == s.traffic.end()) {
        throw Error(Errc::ValidationError, "traffic: run_ping needs a ping flow");
    }
    FlowSpec ping = *it;
    ping.ipi_s = ipi_s;
    ping.count = count;
    ping.data_bytes = data_bytes;
    ping.stop_s.reset();
    s.traffic = {ping};
    s.t_end = seconds(ping.start_s + ipi_s * static_cast<double>(count)) + kPingTail;
    return run_scenario(s).report;
}

MetricsReport run_flood(const ScenarioSpec& spec, std::size_t datagram_bytes, Duration duration)
{
    ScenarioSpec s = spec;
    s.traffic.clear();
    for (const auto& f : spec.traffic) {
        if (f.kind == FlowKind::Flood) {
            s.traffic.push_back(f);
            s.traffic.back().payload_bytes = datagram_bytes;
        }
    }
    if (s.traffic.empty()) {
        throw Error(Errc::ValidationError, "traffic: run_flood needs at least one flood flow");
    }
    s.t_end = duration;
    return run_scenario(s).report;
}

MetricsReport run_multipoint(const ScenarioSpec& spec, Direction direction)
{
    if (spec.nodes.size() != 3) {
        throw Error(Errc::ValidationError, "nodes: run_multipoint needs exactly three nodes");
    }
    const auto gains = build_channel_params(spec).gain;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i != j && gains[i][j] <= 0.0) {
                throw Error(Errc::ValidationError, "nodes: run_multipoint needs every pair within view");
            }
        }
    }
    std::size_t bytes = 1000;
    for (const auto& f : spec.traffic) {
        if (f.kind == FlowKind::Flood) {
            bytes = f.payload_bytes;
            break;
        }
    }
    ScenarioSpec s = spec;
    s.traffic.clear();
    const int hub = spec.nodes[0].id;
    for (int k = 1; k <= 2; ++k) {
        const int other = spec.nodes[static_cast<std::size_t>(k)].id;
        FlowSpec f;
        f.id = k - 1;
        f.kind = FlowKind::Flood;
        f.src = direction == Direction::Downlink ? hub : other;
        f.dst = direction == Direction::Downlink ? other : hub;
        f.payload_bytes = bytes;
        // A matching flow in the spec keeps its id and can switch the flow off.
        for (const auto& given : spec.traffic) {
            if (given.kind == FlowKind::Flood && given.src == f.src && given.dst == f.dst) {
                f.id = given.id;
                f.enabled = given.enabled;
            }
        }
        s.traffic.push_back(f);
    }
    return run_scenario(s).report;
}

double analytic_saturation_kbps(const mac::MacParams& mac, Duration switch_latency, std::size_t payload)
{
    const double cycle = cycle_seconds_without_proc(mac, switch_latency, payload) +
                         2.0 * to_seconds(mac.processing_time(coded_bytes(payload)));
    return 8.0 * static_cast<double>(payload) / cycle / 1000.0;
}

Calibration calibrate(const mac::MacParams& mac, Duration switch_latency, TargetPoint p1, TargetPoint p2)
{
    if (p1.payload == p2.payload || p1.kbps <= 0.0 || p2.kbps <= 0.0) {
        throw Error(Errc::InvalidArgument, "calibrate: need two distinct payloads with positive targets");
    }
    mac::MacParams bare = mac;
    bare.proc_overhead_a = Duration::zero();
    bare.proc_overhead_b = Duration::zero();
    // Per point: 8P / target - cycle0 = 2a + 2b * coded.
    auto excess = [&](const TargetPoint& p) {
        return 8.0 * static_cast<double>(p.payload) / (p.kbps * 1000.0) -
               cycle_seconds_without_proc(bare, switch_latency, p.payload);
    };
    const double y1 = excess(p1) / 2.0;
    const double y2 = excess(p2) / 2.0;
    const double c1 = static_cast<double>(coded_bytes(p1.payload));
    const double c2 = static_cast<double>(coded_bytes(p2.payload));
    const double b = (y2 - y1) / (c2 - c1);
    const double a = y1 - b * c1;
    if (a < 0.0 || b < 0.0) {
        throw Error(Errc::InvalidArgument, "calibrate: targets need negative processing time");
    }
    return Calibration{seconds(a), seconds(b)};
}

}  // namespace openvlc::harness
