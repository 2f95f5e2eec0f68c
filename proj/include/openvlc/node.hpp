#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "openvlc/mac.hpp"
#include "openvlc/optical_channel.hpp"
#include "openvlc/sim_kernel.hpp"
#include "openvlc/trace.hpp"

namespace openvlc::mac {

/// What a node needs from the shared medium besides the channel model:
/// emissions must be announced so that other nodes can lock on and re-plan.
class Medium {
public:
    virtual ~Medium() = default;
    virtual sim::Scheduler& scheduler() = 0;
    virtual channel::OpticalChannel& channel() = 0;
    virtual std::uint64_t start_emission(NodeId node, SimTime start, channel::SymbolRun symbols,
                                         bool fast_sense) = 0;
    virtual void abort_emission(NodeId node, std::uint64_t emission_id, SimTime at) = 0;
};

/// Samples `symbols` consecutive slots starting at `window_start` and slices
/// each against `threshold`. Busy iff at least one slot reads HIGH.
/// Error{HalfDuplexViolation} if the LED is not receiving in every slot.
ChannelStatus basic_sense(const channel::OpticalChannel& ch, NodeId node, SimTime window_start, int symbols,
                          double threshold, sim::RngStream& noise);

/// Single-slot sense at `t`. Error{HalfDuplexViolation} if the LED is not
/// receiving at `t`.
ChannelStatus fast_sense(const channel::OpticalChannel& ch, NodeId node, SimTime t, double threshold,
                         sim::RngStream& noise);

class Node {
public:
    Node(NodeId id, Address address, MacParams params, Medium& medium, std::uint64_t root_seed, TraceFn trace);

    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    NodeId id() const noexcept { return id_; }
    Address address() const noexcept { return address_; }
    const MacParams& params() const noexcept { return params_; }
    const MacState& state() const noexcept { return state_; }
    const MacCounters& counters() const noexcept { return state_.counters; }
    ProtocolDemux& demux() noexcept { return demux_; }

    /// Host-side entry point; throws Error{InvalidPayload|PayloadTooLarge|QueueFull}.
    void host_send(Address dst, ProtocolId protocol, Bytes payload);

    /// Threshold used by carrier sensing: the last preamble-derived threshold
    /// when one exists, otherwise half of ADC full scale.
    double sense_threshold() const;
    std::optional<double> last_threshold() const noexcept { return last_threshold_; }

    // Host hooks, invoked after the MAC finishes with a frame.
    std::function<void(const MacFrame&)> on_frame_acked;
    std::function<void(const MacFrame&)> on_frame_dropped;

    // Medium notifications.
    void on_emission_start(const channel::Emission& e);
    void on_emission_end(const channel::Emission& e);
    void on_channel_changed(SimTime from);

private:
    struct Capture {
        std::uint64_t emission_id = 0;
        NodeId emitter = 0;
    };

    struct FastSenseSample {
        SimTime at{};
        bool busy = false;
    };

    void dispatch(const MacEvent& ev);
    void apply(Actions actions);
    void start_basic_sense();
    void start_data_tx(const MacFrame& frame, int attempt);
    void start_ack_tx(const MacFrame& ack);
    void finish_data_tx();
    void collision_abort();
    void plan_fast_sense(SimTime from);
    void decode_capture(const channel::Emission& e);
    void switch_to_rx(SimTime now);
    void trace(const std::string& kind, nlohmann::json detail = nlohmann::json::object());
    MacContext context();

    NodeId id_;
    Address address_;
    MacParams params_;
    Medium& medium_;
    sim::Scheduler& sched_;
    channel::OpticalChannel& channel_;
    sim::RngStream backoff_rng_;
    sim::RngStream noise_rng_;
    TraceFn trace_;
    MacState state_;
    ProtocolDemux demux_;

    SimTime rx_ready_at_{0};
    SimTime driver_busy_until_{0};
    std::optional<double> last_threshold_;
    std::optional<Capture> capture_;

    sim::EventHandle sense_event_;
    sim::EventHandle ack_timer_;
    sim::EventHandle data_done_event_;
    sim::EventHandle abort_event_;
    SimTime abort_decided_at_{};
    std::uint64_t data_emission_ = 0;
    std::vector<FastSenseSample> fast_sense_log_;

    // Symbols of the frame currently in service, reused by retransmissions.
    MacFrame coded_frame_;
    channel::SymbolRun coded_symbols_;
};

}  // namespace openvlc::mac
