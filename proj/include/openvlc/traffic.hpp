#pragma once

#include <map>
#include <vector>

#include "openvlc/network.hpp"
#include "openvlc/scenario.hpp"

namespace openvlc::harness {

inline constexpr ProtocolId kEchoProtocol = 0x0001;
inline constexpr ProtocolId kDatagramProtocol = 0x0011;

inline constexpr std::size_t kEchoHeaderBytes = 8;
inline constexpr std::size_t kDatagramHeaderBytes = 6;  // flow id (2) + sequence (4)

inline constexpr std::uint8_t kEchoRequest = 8;
inline constexpr std::uint8_t kEchoReply = 0;

// Saturating sources keep this many frames inside the MAC so the next one is
// ready the moment the current one completes.
inline constexpr std::size_t kSaturationDepth = 2;

/// Installs the scenario's flows on a network and records app-level trace
/// events (app_tx, app_rx, ping_req, ping_reply, app_queue_full).
///
/// Saturating flows that share a source are served round-robin; that is how
/// a downlink source alternates between its sinks.
class TrafficManager {
public:
    TrafficManager(Network& net, const ScenarioSpec& spec);

    TrafficManager(const TrafficManager&) = delete;
    TrafficManager& operator=(const TrafficManager&) = delete;

private:
    struct Flow {
        FlowSpec spec;
        NodeId src = 0;
        NodeId dst = 0;
        std::uint32_t next_seq = 0;
        SimTime stop{};
    };

    void refill(NodeId node);
    void send_datagram(Flow& flow);
    void send_ping(Flow& flow);
    void schedule_periodic(std::size_t flow_index, SimTime at);
    void on_datagram(NodeId node, const mac::Datagram& d);
    void on_echo(NodeId node, const mac::Datagram& d);
    void app_trace(NodeId node, const char* kind, nlohmann::json detail);
    Bytes filler(NodeId node, std::size_t n);

    Network& net_;
    std::vector<Flow> flows_;
    std::map<int, std::size_t> by_id_;
    std::vector<std::vector<std::size_t>> saturating_;  // per source node
    std::vector<std::size_t> rr_next_;
    std::vector<sim::RngStream> rng_;
    // Submission times of outstanding pings, keyed by (flow, seq).
    std::map<std::pair<int, std::uint32_t>, SimTime> ping_sent_;
};

Bytes make_datagram_payload(std::uint16_t flow, std::uint32_t seq, std::size_t total_bytes, const Bytes& fill);
Bytes make_echo_payload(std::uint8_t type, std::uint16_t ident, std::uint16_t seq, const Bytes& data);

}  // namespace openvlc::harness
