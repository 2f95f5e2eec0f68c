#include "openvlc/traffic.hpp"

#include <algorithm>

namespace openvlc::harness {

namespace {

std::uint16_t get_u16(const Bytes& b, std::size_t at)
{
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

std::uint32_t get_u32(const Bytes& b, std::size_t at)
{
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
           std::uint32_t{b[at + 3]};
}

void put_u16(Bytes& b, std::uint16_t v)
{
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

Bytes make_datagram_payload(std::uint16_t flow, std::uint32_t seq, std::size_t total_bytes, const Bytes& fill)
{
    Bytes out;
    out.reserve(total_bytes);
    put_u16(out, flow);
    put_u16(out, static_cast<std::uint16_t>(seq >> 16));
    put_u16(out, static_cast<std::uint16_t>(seq));
    for (std::size_t i = 0; out.size() < total_bytes; ++i) {
        out.push_back(fill.empty() ? std::uint8_t{0} : fill[i % fill.size()]);
    }
    return out;
}

Bytes make_echo_payload(std::uint8_t type, std::uint16_t ident, std::uint16_t seq, const Bytes& data)
{
    Bytes out{type, 0, 0, 0};  // type, code, checksum (unused)
    put_u16(out, ident);
    put_u16(out, seq);
    out.insert(out.end(), data.begin(), data.end());
    return out;
}

TrafficManager::TrafficManager(Network& net, const ScenarioSpec& spec)
    : net_(net), saturating_(net.size()), rr_next_(net.size(), 0)
{
    for (std::size_t i = 0; i < net.size(); ++i) {
        rng_.emplace_back(spec.seed, i, sim::RngPurpose::Traffic);
    }
    for (const auto& fs : spec.traffic) {
        if (!fs.enabled) {
            continue;
        }
        Flow f;
        f.spec = fs;
        f.src = spec.node_index(fs.src);
        f.dst = spec.node_index(fs.dst);
        f.stop = fs.stop_s ? SimTime{0} + seconds(*fs.stop_s) : SimTime::max();
        by_id_[fs.id] = flows_.size();
        flows_.push_back(std::move(f));
    }

    for (NodeId n = 0; n < net.size(); ++n) {
        auto& node = net.node(n);
        node.demux().register_handler(kDatagramProtocol, [this, n](const mac::Datagram& d) { on_datagram(n, d); });
        node.demux().register_handler(kEchoProtocol, [this, n](const mac::Datagram& d) { on_echo(n, d); });
        node.on_frame_acked = [this, n](const mac::MacFrame&) { refill(n); };
        node.on_frame_dropped = [this, n](const mac::MacFrame&) { refill(n); };
    }

    auto& sched = net.scheduler();
    for (std::size_t i = 0; i < flows_.size(); ++i) {
        const Flow& f = flows_[i];
        const SimTime start = SimTime{0} + seconds(f.spec.start_s);
        const bool saturating =
            f.spec.kind == FlowKind::Saturation || (f.spec.kind == FlowKind::Flood && f.spec.rate_bps == 0.0);
        if (saturating) {
            saturating_[f.src].push_back(i);
            const NodeId src = f.src;
            sched.schedule_at(start, static_cast<std::int64_t>(src), sim::EventKind::TrafficArrival,
                              [this, src] { refill(src); });
        } else {
            schedule_periodic(i, start);
        }
    }
}

Bytes TrafficManager::filler(NodeId node, std::size_t n)
{
    Bytes out(n);
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(rng_[node].uniform_int(0, 255));
    }
    return out;
}

void TrafficManager::app_trace(NodeId node, const char* kind, nlohmann::json detail)
{
    net_.add_trace(TraceEvent{net_.scheduler().now(), static_cast<std::int64_t>(node), kind, std::move(detail)});
}

void TrafficManager::refill(NodeId node)
{
    auto& list = saturating_[node];
    if (list.empty()) {
        return;
    }
    auto& mac_node = net_.node(node);
    const SimTime now = net_.scheduler().now();
    while (mac_node.state().frames_held() < kSaturationDepth) {
        // Next active flow in round-robin order.
        std::optional<std::size_t> pick;
        for (std::size_t k = 0; k < list.size() && !pick; ++k) {
            const std::size_t idx = list[(rr_next_[node] + k) % list.size()];
            const Flow& f = flows_[idx];
            if (now >= SimTime{0} + seconds(f.spec.start_s) && now < f.stop) {
                pick = idx;
                rr_next_[node] = (rr_next_[node] + k + 1) % list.size();
            }
        }
        if (!pick) {
            return;
        }
        send_datagram(flows_[*pick]);
    }
}

void TrafficManager::send_datagram(Flow& f)
{
    const std::uint32_t seq = f.next_seq++;
    const std::size_t fill_len = f.spec.payload_bytes - kDatagramHeaderBytes;
    Bytes payload = make_datagram_payload(static_cast<std::uint16_t>(f.spec.id), seq, f.spec.payload_bytes,
                                          filler(f.src, fill_len));
    try {
        net_.node(f.src).host_send(net_.node(f.dst).address(), kDatagramProtocol, std::move(payload));
        app_trace(f.src, "app_tx", {{"flow", f.spec.id}, {"seq", seq}, {"bytes", f.spec.payload_bytes}});
    } catch (const Error& e) {
        if (e.code() != Errc::QueueFull) {
            throw;
        }
        app_trace(f.src, "app_queue_full", {{"flow", f.spec.id}, {"seq", seq}});
    }
}

void TrafficManager::send_ping(Flow& f)
{
    const std::uint32_t seq = f.next_seq++;
    Bytes payload = make_echo_payload(kEchoRequest, static_cast<std::uint16_t>(f.spec.id),
                                      static_cast<std::uint16_t>(seq), filler(f.src, f.spec.data_bytes));
    const SimTime now = net_.scheduler().now();
    app_trace(f.src, "ping_req", {{"flow", f.spec.id}, {"seq", seq}});
    try {
        net_.node(f.src).host_send(net_.node(f.dst).address(), kEchoProtocol, std::move(payload));
        ping_sent_[{f.spec.id, seq}] = now;
    } catch (const Error& e) {
        if (e.code() != Errc::QueueFull) {
            throw;
        }
        app_trace(f.src, "app_queue_full", {{"flow", f.spec.id}, {"seq", seq}});
    }
}

void TrafficManager::schedule_periodic(std::size_t flow_index, SimTime at)
{
    Flow& f = flows_[flow_index];
    if (at >= f.stop) {
        return;
    }
    if (f.spec.kind == FlowKind::Ping && f.spec.count > 0 && f.next_seq >= f.spec.count) {
        return;
    }
    net_.scheduler().schedule_at(at, static_cast<std::int64_t>(f.src), sim::EventKind::TrafficArrival,
                                 [this, flow_index, at] {
                                     Flow& fl = flows_[flow_index];
                                     Duration period{};
                                     if (fl.spec.kind == FlowKind::Ping) {
                                         send_ping(fl);
                                         period = seconds(fl.spec.ipi_s);
                                     } else {
                                         send_datagram(fl);
                                         period = seconds(8.0 * static_cast<double>(fl.spec.payload_bytes) /
                                                          fl.spec.rate_bps);
                                     }
                                     schedule_periodic(flow_index, at + period);
                                 });
}

void TrafficManager::on_datagram(NodeId node, const mac::Datagram& d)
{
    if (d.payload.size() < kDatagramHeaderBytes) {
        return;
    }
    const int flow = get_u16(d.payload, 0);
    const std::uint32_t seq = get_u32(d.payload, 2);
    app_trace(node, "app_rx", {{"flow", flow}, {"seq", seq}, {"bytes", d.payload.size()}});
}

void TrafficManager::on_echo(NodeId node, const mac::Datagram& d)
{
    if (d.payload.size() < kEchoHeaderBytes) {
        return;
    }
    const std::uint8_t type = d.payload[0];
    const std::uint16_t ident = get_u16(d.payload, 4);
    const std::uint16_t seq = get_u16(d.payload, 6);
    if (type == kEchoRequest) {
        Bytes reply = d.payload;
        reply[0] = kEchoReply;
        try {
            net_.node(node).host_send(d.peer, kEchoProtocol, std::move(reply));
        } catch (const Error& e) {
            if (e.code() != Errc::QueueFull) {
                throw;
            }
            app_trace(node, "app_queue_full", {{"flow", ident}, {"seq", seq}, {"reply", true}});
        }
        return;
    }
    if (type != kEchoReply) {
        return;
    }
    auto it = ping_sent_.find({static_cast<int>(ident), std::uint32_t{seq}});
    if (it == ping_sent_.end()) {
        app_trace(node, "ping_dup", {{"flow", ident}, {"seq", seq}});
        return;
    }
    const Duration rtt = net_.scheduler().now() - it->second;
    ping_sent_.erase(it);
    app_trace(node, "ping_reply", {{"flow", ident}, {"seq", seq}, {"rtt_us", to_microseconds(rtt)}});
}

}  // namespace openvlc::harness
