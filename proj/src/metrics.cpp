#include "openvlc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace openvlc::harness {

namespace {

constexpr double kRttThresholdMs = 200.0;

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << v;
    return os.str();
}

}  // namespace

std::vector<FlowInfo> flow_infos(const ScenarioSpec& spec)
{
    std::vector<FlowInfo> out;
    for (const auto& f : spec.traffic) {
        if (f.enabled) {
            out.push_back(FlowInfo{f.id, f.kind, f.src, f.dst});
        }
    }
    return out;
}

const FlowSummary* MetricsReport::flow(int id) const
{
    for (const auto& f : flows) {
        if (f.flow == id) {
            return &f;
        }
    }
    return nullptr;
}

std::vector<double> MetricsReport::flow_series(int id) const
{
    std::vector<double> out;
    for (const auto& s : series) {
        if (s.flow == id) {
            out.push_back(s.kbps);
        }
    }
    return out;
}

double jain_index(std::span<const double> xs)
{
    double sum = 0.0;
    double sq = 0.0;
    for (double x : xs) {
        sum += x;
        sq += x * x;
    }
    if (xs.empty() || sq == 0.0) {
        return 1.0;
    }
    return sum * sum / (static_cast<double>(xs.size()) * sq);
}

double median(std::vector<double> xs)
{
    if (xs.empty()) {
        return 0.0;
    }
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double percentile(std::vector<double> xs, double p)
{
    if (xs.empty()) {
        return 0.0;
    }
    std::sort(xs.begin(), xs.end());
    const double rank = std::ceil(p / 100.0 * static_cast<double>(xs.size()));
    const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(xs.size()))) - 1;
    return xs[idx];
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> xs)
{
    std::sort(xs.begin(), xs.end());
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i + 1 < xs.size() && xs[i + 1] == xs[i]) {
            continue;
        }
        out.emplace_back(xs[i], static_cast<double>(i + 1) / n);
    }
    return out;
}

MetricsReport compute_metrics(const std::vector<TraceEvent>& trace, const std::vector<FlowInfo>& flows,
                              Duration interval, SimTime t_end)
{
    MetricsReport r;
    r.t_end_s = to_seconds(t_end - SimTime{0});
    r.interval_s = to_seconds(interval);
    const auto full_intervals = static_cast<std::size_t>((t_end - SimTime{0}) / interval);
    const std::size_t buckets = std::max<std::size_t>(full_intervals, 1);

    std::map<int, std::vector<std::uint64_t>> bytes_per_bucket;
    std::map<int, FlowSummary> summaries;
    std::map<int, PingSummary> pings;
    std::set<std::pair<int, std::uint64_t>> seen;
    std::map<std::pair<int, std::uint64_t>, double> ping_submit;
    std::map<int, std::vector<double>> rtts;

    for (const auto& f : flows) {
        summaries[f.id] = FlowSummary{.flow = f.id, .kind = f.kind};
        if (f.kind == FlowKind::Ping) {
            pings[f.id] = PingSummary{.flow = f.id};
        } else {
            bytes_per_bucket[f.id].assign(buckets, 0);
        }
    }

    for (const auto& ev : trace) {
        if (ev.time > t_end) {
            continue;
        }
        if (ev.kind == "app_rx") {
            const int flow = ev.detail.at("flow").get<int>();
            auto it = summaries.find(flow);
            if (it == summaries.end()) {
                continue;
            }
            const auto seq = ev.detail.at("seq").get<std::uint64_t>();
            if (!seen.insert({flow, seq}).second) {
                ++it->second.duplicate_packets;
                continue;
            }
            const auto bytes = ev.detail.at("bytes").get<std::uint64_t>();
            ++it->second.unique_packets;
            it->second.delivered_bytes += bytes;
            const auto bucket = static_cast<std::size_t>((ev.time - SimTime{0}) / interval);
            if (bucket < full_intervals || full_intervals == 0) {
                bytes_per_bucket[flow][std::min(bucket, buckets - 1)] += bytes;
            }
        } else if (ev.kind == "ping_req") {
            const int flow = ev.detail.at("flow").get<int>();
            if (auto it = pings.find(flow); it != pings.end()) {
                ++it->second.sent;
                ping_submit[{flow, ev.detail.at("seq").get<std::uint64_t>()}] = to_seconds(ev.time - SimTime{0});
            }
        } else if (ev.kind == "ping_reply") {
            const int flow = ev.detail.at("flow").get<int>();
            if (auto it = pings.find(flow); it != pings.end()) {
                ++it->second.received;
                const auto seq = ev.detail.at("seq").get<std::uint32_t>();
                const double rtt_ms = ev.detail.at("rtt_us").get<double>() / 1000.0;
                rtts[flow].push_back(rtt_ms);
                r.rtt_records.push_back(RttRecord{flow, seq, ping_submit[{flow, seq}], rtt_ms});
            }
        } else if (ev.kind == "counters") {
            r.counters[ev.node] = ev.detail;
        }
    }

    const double seconds_total = r.t_end_s;
    const double bucket_s = full_intervals == 0 ? seconds_total : r.interval_s;
    std::vector<double> means;
    for (auto& [id, s] : summaries) {
        if (s.kind == FlowKind::Ping) {
            continue;
        }
        s.mean_kbps = static_cast<double>(s.delivered_bytes) * 8.0 / seconds_total / 1000.0;
        std::vector<double> kbps;
        const auto& b = bytes_per_bucket[id];
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double v = static_cast<double>(b[i]) * 8.0 / bucket_s / 1000.0;
            kbps.push_back(v);
            r.series.push_back(IntervalSample{id, i, static_cast<double>(i) * bucket_s,
                                              static_cast<double>(i + 1) * bucket_s, b[i], v});
        }
        s.median_kbps = median(kbps);
        s.min_kbps = *std::min_element(kbps.begin(), kbps.end());
        s.max_kbps = *std::max_element(kbps.begin(), kbps.end());
        means.push_back(s.mean_kbps);
    }
    r.jain_index = jain_index(means);

    for (auto& [id, p] : pings) {
        const auto& v = rtts[id];
        p.lost = p.sent - p.received;
        if (!v.empty()) {
            const auto below = std::count_if(v.begin(), v.end(), [](double x) { return x < kRttThresholdMs; });
            p.frac_below_200ms = static_cast<double>(below) / static_cast<double>(v.size());
            p.median_rtt_ms = median(v);
            p.p90_rtt_ms = percentile(v, 90.0);
        }
        r.pings.push_back(p);
    }
    for (auto& [id, s] : summaries) {
        r.flows.push_back(s);
    }
    return r;
}

nlohmann::json summary_json(const MetricsReport& r, const ScenarioSpec& spec)
{
    nlohmann::json j;
    j["scenario"] = spec.name;
    j["seed"] = spec.seed;
    j["t_end_s"] = r.t_end_s;
    j["report_interval_s"] = r.interval_s;
    j["jain_index"] = r.jain_index;
    j["flows"] = nlohmann::json::array();
    for (const auto& f : r.flows) {
        if (f.kind == FlowKind::Ping) {
            continue;
        }
        j["flows"].push_back({
            {"flow", f.flow},
            {"kind", to_string(f.kind)},
            {"unique_packets", f.unique_packets},
            {"duplicate_packets", f.duplicate_packets},
            {"delivered_bytes", f.delivered_bytes},
            {"mean_kbps", f.mean_kbps},
            {"median_kbps", f.median_kbps},
            {"min_kbps", f.min_kbps},
            {"max_kbps", f.max_kbps},
        });
    }
    j["pings"] = nlohmann::json::array();
    for (const auto& p : r.pings) {
        j["pings"].push_back({
            {"flow", p.flow},
            {"sent", p.sent},
            {"received", p.received},
            {"lost", p.lost},
            {"frac_below_200ms", p.frac_below_200ms},
            {"median_rtt_ms", p.median_rtt_ms},
            {"p90_rtt_ms", p.p90_rtt_ms},
        });
    }
    nlohmann::json counters = nlohmann::json::object();
    for (const auto& [node, c] : r.counters) {
        counters[std::to_string(node)] = c;
    }
    j["counters"] = counters;
    return j;
}

std::string metrics_csv(const MetricsReport& r, const std::vector<FlowInfo>& flows)
{
    std::ostringstream os;
    os << "flow,kind,src,dst,interval,start_s,end_s,bytes,throughput_kbps\n";
    for (const auto& s : r.series) {
        const auto it = std::find_if(flows.begin(), flows.end(), [&](const FlowInfo& f) { return f.id == s.flow; });
        os << s.flow << ',' << (it != flows.end() ? to_string(it->kind) : "?") << ','
           << (it != flows.end() ? it->src : -1) << ',' << (it != flows.end() ? it->dst : -1) << ',' << s.index
           << ',' << fmt(s.start_s) << ',' << fmt(s.end_s) << ',' << s.bytes << ',' << fmt(s.kbps) << '\n';
    }
    return os.str();
}

std::string rtt_csv(const MetricsReport& r)
{
    std::ostringstream os;
    os << "flow,seq,submit_s,rtt_ms\n";
    for (const auto& rec : r.rtt_records) {
        os << rec.flow << ',' << rec.seq << ',' << fmt(rec.submit_s) << ',' << fmt(rec.rtt_ms) << '\n';
    }
    return os.str();
}

}  // namespace openvlc::harness
