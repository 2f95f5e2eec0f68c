#pragma once

// CSMA/CD MAC for a single node, expressed as an event-driven state machine.
//
// mac_transition() consumes one event and returns the actions the node must
// carry out (start sensing, emit a frame, arm a timer, ...). It never touches
// the channel or the clock itself, which keeps it testable in isolation; the
// Node class in node.hpp binds it to the simulator.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "openvlc/common.hpp"
#include "openvlc/frame_codec.hpp"
#include "openvlc/sim_kernel.hpp"

namespace openvlc::mac {

using frame::MacFrame;

struct MacParams {
    Duration symbol_period = microseconds(20);
    int cw_min = 4;
    int cw_max = 64;
    int basic_sense_symbols = 16;
    int collision_busy_symbols = 4;
    // Unset: derived per frame, see ack_timeout_for().
    std::optional<Duration> ack_timeout;
    int max_retx = 3;
    std::size_t max_payload = frame::kDefaultMaxPayload;
    std::size_t queue_capacity = 64;
    // Driver processing time proc(coded) = a + b * coded_bytes.
    Duration proc_overhead_a{0};
    Duration proc_overhead_b{0};  // per coded byte

    /// Throws Error{ValidationError} naming the offending field.
    void validate() const;

    Duration processing_time(std::size_t coded_bytes) const
    {
        return proc_overhead_a + proc_overhead_b * static_cast<std::int64_t>(coded_bytes);
    }

    Duration airtime(std::size_t payload_length) const
    {
        return symbol_period * static_cast<std::int64_t>(frame::frame_symbol_count(payload_length));
    }

    /// 2 x (ACK airtime + 2 switch latencies + receiver processing of the DATA frame).
    Duration ack_timeout_for(std::size_t data_payload_length, Duration switch_latency) const;
};

enum class MacPhase : std::uint8_t { Idle, Prepare, BasicSense, Backoff, TxData, AwaitAck, Rx, TxAck };

const char* to_string(MacPhase phase);

enum class ChannelStatus : std::uint8_t { Clear, Busy };

struct MacCounters {
    std::uint64_t tx_data = 0;
    std::uint64_t tx_ack = 0;
    std::uint64_t retx = 0;
    std::uint64_t drops = 0;
    std::uint64_t collisions_detected = 0;
    std::uint64_t rx_ok = 0;
    std::uint64_t rx_crc_fail = 0;
    std::uint64_t rx_rs_fail = 0;
    std::uint64_t rx_sync_fail = 0;
    std::uint64_t rx_unknown_proto = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t queue_rejects = 0;
    std::uint64_t frames_submitted = 0;
    std::uint64_t frames_delivered = 0;  // acknowledged by the peer
    std::uint64_t frames_dropped = 0;

    friend bool operator==(const MacCounters&, const MacCounters&) = default;
};

struct MacState {
    MacPhase phase = MacPhase::Idle;
    int cw = 4;
    int backoff_counter = 0;
    int retx_count = 0;
    std::deque<MacFrame> tx_queue;
    std::optional<MacFrame> current_frame;

    // Receive side: the ACK owed for the DATA being processed, and the phase
    // to resume once it has been sent.
    std::optional<MacFrame> pending_rx;
    bool pending_rx_duplicate = false;
    MacPhase resume_phase = MacPhase::Idle;
    bool deferred_prepare_done = false;
    bool deferred_ack_timeout = false;

    // Last DATA bytes seen per source, for duplicate accounting.
    std::map<Address, Bytes> last_rx;

    MacCounters counters;

    std::size_t frames_held() const noexcept { return tx_queue.size() + (current_frame ? 1 : 0); }
};

namespace event {
struct PrepareDone {};
struct SenseDone {
    ChannelStatus status;
};
struct DataTxDone {};
struct CollisionDetected {};
struct AckTimeout {};
struct FrameDecoded {
    MacFrame frame;
};
struct RxProcDone {};
struct AckTxDone {};
}  // namespace event

using MacEvent = std::variant<event::PrepareDone, event::SenseDone, event::DataTxDone, event::CollisionDetected,
                              event::AckTimeout, event::FrameDecoded, event::RxProcDone, event::AckTxDone>;

namespace action {
struct BeginPrepare {
    Duration delay;
};
struct BeginBasicSense {};
struct BeginDataTx {
    MacFrame frame;
    int attempt;  // 1 for the first transmission
};
struct ArmAckTimeout {
    Duration timeout;
};
struct CancelAckTimeout {};
struct BeginRxProc {
    Duration delay;
};
struct BeginAckTx {
    MacFrame ack;
};
struct DeliverUp {
    MacFrame frame;
    bool duplicate;
};
struct FrameAcked {
    MacFrame frame;
};
struct FrameDropped {
    MacFrame frame;
};
struct AbandonSense {};
}  // namespace action

using MacAction = std::variant<action::BeginPrepare, action::BeginBasicSense, action::BeginDataTx,
                               action::ArmAckTimeout, action::CancelAckTimeout, action::BeginRxProc,
                               action::BeginAckTx, action::DeliverUp, action::FrameAcked, action::FrameDropped,
                               action::AbandonSense>;

using Actions = std::vector<MacAction>;

/// Static context a transition needs besides the state.
struct MacContext {
    const MacParams& params;
    Address self;
    Duration switch_latency;
    sim::RngStream& backoff_rng;
};

MacState make_initial_state(const MacParams& params);

/// Uniform integer in [1, cw - 1].
int draw_backoff(int cw, sim::RngStream& rng);

MacFrame build_ack(const MacFrame& received, Address self);

/// Validates and enqueues a host frame. Throws Error{InvalidPayload},
/// Error{PayloadTooLarge} or Error{QueueFull}; otherwise returns the actions
/// needed to start channel access when the MAC was idle.
Actions host_enqueue(MacState& state, MacFrame frame, const MacContext& ctx);

/// Applies one event. Error{IllegalEvent} if the event cannot occur in the
/// current phase.
Actions mac_transition(MacState& state, const MacEvent& ev, const MacContext& ctx);

/// The AWAIT_ACK timeout path (also used for collision aborts).
Actions handle_ack_timeout(MacState& state, const MacContext& ctx);

struct Datagram {
    Address peer = 0;
    ProtocolId protocol = 0;
    Bytes payload;
};

using DatagramHandler = std::function<void(const Datagram&)>;

enum class DeliveryResult : std::uint8_t { Routed, Dropped };

/// Protocol demultiplexer towards the host stack.
class ProtocolDemux {
public:
    void register_handler(ProtocolId protocol, DatagramHandler handler);
    bool has_handler(ProtocolId protocol) const { return handlers_.contains(protocol); }

    /// Unregistered protocols increment counters.rx_unknown_proto.
    DeliveryResult deliver_up(const MacFrame& frame, MacCounters& counters) const;

private:
    std::map<ProtocolId, DatagramHandler> handlers_;
};

}  // namespace openvlc::mac
