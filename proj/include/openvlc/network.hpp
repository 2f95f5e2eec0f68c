#pragma once

#include <map>
#include <memory>
#include <vector>

#include "openvlc/node.hpp"
#include "openvlc/optical_channel.hpp"
#include "openvlc/sim_kernel.hpp"
#include "openvlc/trace.hpp"

namespace openvlc {

struct NodeSetup {
    Address address = 0;
    mac::MacParams mac;
};

/// Owns the scheduler, the channel and every node, and relays emission
/// start/end/abort notifications between them.
class Network final : public mac::Medium {
public:
    Network(channel::ChannelParams channel_params, const std::vector<NodeSetup>& nodes, std::uint64_t seed);
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    sim::Scheduler& scheduler() override { return sched_; }
    channel::OpticalChannel& channel() override { return *channel_; }
    std::uint64_t start_emission(NodeId node, SimTime start, channel::SymbolRun symbols, bool fast_sense) override;
    void abort_emission(NodeId node, std::uint64_t emission_id, SimTime at) override;

    std::size_t size() const noexcept { return nodes_.size(); }
    mac::Node& node(NodeId id);
    /// Node index for a MAC address; Error{UnknownNode} if absent.
    NodeId index_of(Address address) const;

    void add_trace(TraceEvent event) { trace_.push_back(std::move(event)); }
    TraceFn trace_fn()
    {
        return [this](TraceEvent e) { trace_.push_back(std::move(e)); };
    }
    const std::vector<TraceEvent>& trace() const noexcept { return trace_; }

    /// Runs to t_end, then appends one "counters" trace event per node.
    void run_until(SimTime t_end);

private:
    void schedule_prune();

    sim::Scheduler sched_;
    std::unique_ptr<channel::OpticalChannel> channel_;
    std::vector<std::unique_ptr<mac::Node>> nodes_;
    std::map<std::uint64_t, sim::EventHandle> end_events_;
    std::vector<TraceEvent> trace_;
};

nlohmann::json counters_to_json(const mac::MacCounters& c);

}  // namespace openvlc
