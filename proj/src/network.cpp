#include "openvlc/network.hpp"

#include <string>

namespace openvlc {

namespace {

// History older than this is never sampled again: the longest frame lasts
// well under a second.
constexpr Duration kHistoryHorizon = std::chrono::seconds(2);
constexpr Duration kPruneInterval = std::chrono::seconds(5);

}  // namespace

std::string to_jsonl(const TraceEvent& event)
{
    nlohmann::ordered_json j;
    j["time_us"] = to_microseconds(event.time);
    j["node"] = event.node;
    j["kind"] = event.kind;
    j["detail"] = event.detail;
    return j.dump();
}

nlohmann::json counters_to_json(const mac::MacCounters& c)
{
    return {
        {"tx_data", c.tx_data},
        {"tx_ack", c.tx_ack},
        {"retx", c.retx},
        {"drops", c.drops},
        {"collisions_detected", c.collisions_detected},
        {"rx_ok", c.rx_ok},
        {"rx_crc_fail", c.rx_crc_fail},
        {"rx_rs_fail", c.rx_rs_fail},
        {"rx_sync_fail", c.rx_sync_fail},
        {"rx_unknown_proto", c.rx_unknown_proto},
        {"duplicates", c.duplicates},
        {"queue_rejects", c.queue_rejects},
        {"frames_submitted", c.frames_submitted},
        {"frames_delivered", c.frames_delivered},
        {"frames_dropped", c.frames_dropped},
    };
}

Network::Network(channel::ChannelParams channel_params, const std::vector<NodeSetup>& nodes, std::uint64_t seed)
{
    if (nodes.empty()) {
        throw Error(Errc::ValidationError, "nodes: at least one node is required");
    }
    if (channel_params.node_count() != nodes.size()) {
        throw Error(Errc::ValidationError, "channel: gain matrix size does not match node count");
    }
    const Duration ts = nodes.front().mac.symbol_period;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].mac.symbol_period != ts) {
            throw Error(Errc::ValidationError, "nodes[" + std::to_string(i) + "]: all nodes share one symbol period");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (nodes[j].address == nodes[i].address) {
                throw Error(Errc::ValidationError, "nodes[" + std::to_string(i) + "].address: duplicate address");
            }
        }
    }
    channel_ = std::make_unique<channel::OpticalChannel>(std::move(channel_params), ts);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        nodes_.push_back(std::make_unique<mac::Node>(i, nodes[i].address, nodes[i].mac, *this, seed, trace_fn()));
    }
    schedule_prune();
}

mac::Node& Network::node(NodeId id)
{
    if (id >= nodes_.size()) {
        throw Error(Errc::UnknownNode, "network: unknown node " + std::to_string(id));
    }
    return *nodes_[id];
}

NodeId Network::index_of(Address address) const
{
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i]->address() == address) {
            return i;
        }
    }
    throw Error(Errc::UnknownNode, "network: no node with address " + std::to_string(address));
}

std::uint64_t Network::start_emission(NodeId node, SimTime start, channel::SymbolRun symbols, bool fast_sense)
{
    const std::uint64_t id = channel_->emit_frame(node, start, std::move(symbols), fast_sense);
    const channel::Emission* e = channel_->find_emission(node, id);
    const auto target = static_cast<std::int64_t>(node);

    sched_.schedule_at(start, target, sim::EventKind::EmissionStart, [this, node, id] {
        if (const auto* em = channel_->find_emission(node, id); em != nullptr && em->end > em->start) {
            for (auto& n : nodes_) {
                n->on_emission_start(*em);
            }
        }
    });
    end_events_[id] = sched_.schedule_at(e->end, target, sim::EventKind::EmissionEnd, [this, node, id] {
        end_events_.erase(id);
        if (const auto* em = channel_->find_emission(node, id); em != nullptr) {
            for (auto& n : nodes_) {
                n->on_emission_end(*em);
            }
        }
    });

    const SimTime now = sched_.now();
    for (auto& n : nodes_) {
        if (n->id() != node) {
            n->on_channel_changed(now);
        }
    }
    return id;
}

void Network::abort_emission(NodeId node, std::uint64_t emission_id, SimTime at)
{
    channel_->truncate(node, emission_id, at);
    const channel::Emission* e = channel_->find_emission(node, emission_id);
    if (auto it = end_events_.find(emission_id); it != end_events_.end()) {
        sched_.cancel(it->second);
        end_events_.erase(it);
        const SimTime end = std::max(e->end, sched_.now());
        end_events_[emission_id] =
            sched_.schedule_at(end, static_cast<std::int64_t>(node), sim::EventKind::EmissionEnd,
                               [this, node, emission_id] {
                                   end_events_.erase(emission_id);
                                   if (const auto* em = channel_->find_emission(node, emission_id)) {
                                       for (auto& n : nodes_) {
                                           n->on_emission_end(*em);
                                       }
                                   }
                               });
    }
    for (auto& n : nodes_) {
        if (n->id() != node) {
            n->on_channel_changed(at);
        }
    }
}

void Network::schedule_prune()
{
    sched_.schedule(kPruneInterval, sim::kChannelTarget, sim::EventKind::Timer, [this] {
        if (sched_.now() > SimTime{0} + kHistoryHorizon) {
            channel_->forget_before(sched_.now() - kHistoryHorizon);
        }
        schedule_prune();
    });
}

void Network::run_until(SimTime t_end)
{
    sched_.run_until(t_end);
    for (auto& n : nodes_) {
        trace_.push_back(TraceEvent{sched_.now(), static_cast<std::int64_t>(n->id()), "counters",
                                    counters_to_json(n->counters())});
    }
}

}  // namespace openvlc
