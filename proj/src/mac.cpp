#include "openvlc/mac.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace openvlc::mac {

namespace {

[[noreturn]] void illegal(const MacState& state, const char* event)
{
    throw Error(Errc::IllegalEvent, std::string("MAC: event ") + event + " in phase " + to_string(state.phase));
}

bool receptive(MacPhase phase)
{
    switch (phase) {
    case MacPhase::Idle:
    case MacPhase::Prepare:
    case MacPhase::BasicSense:
    case MacPhase::Backoff:
    case MacPhase::AwaitAck:
        return true;
    default:
        return false;
    }
}

std::size_t coded_bytes_of(const MacFrame& f)
{
    return frame::coded_byte_count(frame::serialized_size(f.length()));
}

Actions start_next(MacState& state, const MacContext& ctx)
{
    if (state.tx_queue.empty()) {
        state.phase = MacPhase::Idle;
        return {};
    }
    state.current_frame = std::move(state.tx_queue.front());
    state.tx_queue.pop_front();
    state.retx_count = 0;
    state.backoff_counter = 0;
    state.phase = MacPhase::Prepare;
    return {action::BeginPrepare{ctx.params.processing_time(coded_bytes_of(*state.current_frame))}};
}

Actions begin_data_tx(MacState& state)
{
    state.phase = MacPhase::TxData;
    state.backoff_counter = 0;
    ++state.counters.tx_data;
    return {action::BeginDataTx{*state.current_frame, state.retx_count + 1}};
}

Actions complete_success(MacState& state, const MacContext& ctx, Actions actions)
{
    ++state.counters.frames_delivered;
    actions.push_back(action::FrameAcked{std::move(*state.current_frame)});
    state.current_frame.reset();
    state.cw = ctx.params.cw_min;
    state.retx_count = 0;
    auto next = start_next(state, ctx);
    actions.insert(actions.end(), next.begin(), next.end());
    return actions;
}

// One failed attempt: ACK timeout or an aborted (collided) transmission.
Actions failed_attempt(MacState& state, const MacContext& ctx)
{
    state.retx_count += 1;
    state.cw = std::min(2 * state.cw, ctx.params.cw_max);
    if (state.retx_count > ctx.params.max_retx) {
        ++state.counters.drops;
        ++state.counters.frames_dropped;
        Actions actions{action::FrameDropped{std::move(*state.current_frame)}};
        state.current_frame.reset();
        state.cw = ctx.params.cw_min;
        state.retx_count = 0;
        auto next = start_next(state, ctx);
        actions.insert(actions.end(), next.begin(), next.end());
        return actions;
    }
    ++state.counters.retx;
    state.phase = MacPhase::BasicSense;
    return {action::BeginBasicSense{}};
}

Actions on_frame(MacState& state, const MacFrame& f, const MacContext& ctx)
{
    if (f.dst != ctx.self && f.dst != kBroadcastAddress) {
        return {};
    }
    if (f.is_ack()) {
        if (state.phase == MacPhase::AwaitAck && state.current_frame && f.src == state.current_frame->dst &&
            f.dst == ctx.self) {
            ++state.counters.rx_ok;
            return complete_success(state, ctx, {action::CancelAckTimeout{}});
        }
        return {};
    }
    if (!receptive(state.phase)) {
        illegal(state, "FrameDecoded(DATA)");
    }
    ++state.counters.rx_ok;

    // Without sequence numbers a retransmission after a lost ACK is
    // indistinguishable from new data; identical bytes are only counted.
    auto& last = state.last_rx[f.src];
    const bool duplicate = last == f.payload;
    if (duplicate) {
        ++state.counters.duplicates;
    }
    last = f.payload;

    if (f.dst == kBroadcastAddress) {
        return {action::DeliverUp{f, duplicate}};
    }

    Actions actions;
    if (state.phase == MacPhase::BasicSense || state.phase == MacPhase::Backoff) {
        actions.push_back(action::AbandonSense{});
    }
    state.resume_phase = state.phase;
    state.phase = MacPhase::Rx;
    state.pending_rx = f;
    state.pending_rx_duplicate = duplicate;
    actions.push_back(action::BeginRxProc{ctx.params.processing_time(coded_bytes_of(f))});
    return actions;
}

Actions resume_after_ack(MacState& state, const MacContext& ctx)
{
    state.phase = state.resume_phase;
    switch (state.phase) {
    case MacPhase::Idle:
        return start_next(state, ctx);
    case MacPhase::Prepare:
        if (state.deferred_prepare_done) {
            state.deferred_prepare_done = false;
            state.phase = MacPhase::BasicSense;
            return {action::BeginBasicSense{}};
        }
        return {};
    case MacPhase::BasicSense:
    case MacPhase::Backoff:
        return {action::BeginBasicSense{}};
    case MacPhase::AwaitAck:
        if (state.deferred_ack_timeout) {
            state.deferred_ack_timeout = false;
            return failed_attempt(state, ctx);
        }
        return {};
    default:
        illegal(state, "AckTxDone(resume)");
    }
}

}  // namespace

const char* to_string(MacPhase phase)
{
    switch (phase) {
    case MacPhase::Idle: return "IDLE";
    case MacPhase::Prepare: return "PREPARE";
    case MacPhase::BasicSense: return "BASIC_SENSE";
    case MacPhase::Backoff: return "BACKOFF";
    case MacPhase::TxData: return "TX_DATA";
    case MacPhase::AwaitAck: return "AWAIT_ACK";
    case MacPhase::Rx: return "RX";
    case MacPhase::TxAck: return "TX_ACK";
    }
    return "?";
}

void MacParams::validate() const
{
    auto fail = [](const std::string& what) { throw Error(Errc::ValidationError, what); };
    if (symbol_period <= Duration::zero()) {
        fail("mac.symbol_period_us: must be positive");
    }
    if (cw_min < 2 || !std::has_single_bit(static_cast<unsigned>(cw_min))) {
        fail("mac.cw_min: must be a power of two >= 2");
    }
    if (cw_max < cw_min || !std::has_single_bit(static_cast<unsigned>(cw_max))) {
        fail("mac.cw_max: must be a power of two >= cw_min");
    }
    if (basic_sense_symbols < 1) {
        fail("mac.basic_sense_symbols: must be >= 1");
    }
    if (collision_busy_symbols < 1) {
        fail("mac.collision_busy_symbols: must be >= 1");
    }
    if (ack_timeout && *ack_timeout <= Duration::zero()) {
        fail("mac.ack_timeout_us: must be positive");
    }
    if (max_retx < 0) {
        fail("mac.max_retx: must be >= 0");
    }
    if (max_payload < 1 || max_payload > 0xFFFF) {
        fail("mac.max_payload: must be in 1..65535");
    }
    if (queue_capacity < 1) {
        fail("mac.queue_capacity: must be >= 1");
    }
    if (proc_overhead_a < Duration::zero() || proc_overhead_b < Duration::zero()) {
        fail("mac.proc_overhead: must be >= 0");
    }
}

Duration MacParams::ack_timeout_for(std::size_t data_payload_length, Duration switch_latency) const
{
    if (ack_timeout) {
        return *ack_timeout;
    }
    const std::size_t coded = frame::coded_byte_count(frame::serialized_size(data_payload_length));
    return 2 * (airtime(0) + 2 * switch_latency + processing_time(coded));
}

MacState make_initial_state(const MacParams& params)
{
    MacState s;
    s.cw = params.cw_min;
    return s;
}

int draw_backoff(int cw, sim::RngStream& rng)
{
    if (cw < 2) {
        throw Error(Errc::InvalidArgument, "draw_backoff: cw must be >= 2");
    }
    return static_cast<int>(rng.uniform_int(1, cw - 1));
}

MacFrame build_ack(const MacFrame& received, Address self)
{
    MacFrame ack;
    ack.dst = received.src;
    ack.src = self;
    ack.protocol = received.protocol;
    return ack;
}

Actions host_enqueue(MacState& state, MacFrame frame, const MacContext& ctx)
{
    if (frame.payload.empty()) {
        throw Error(Errc::InvalidPayload, "host_send: zero-length payload is reserved for ACK frames");
    }
    if (frame.payload.size() > ctx.params.max_payload) {
        throw Error(Errc::PayloadTooLarge, "host_send: payload of " + std::to_string(frame.payload.size()) +
                                               " bytes exceeds max_payload");
    }
    if (state.frames_held() >= ctx.params.queue_capacity) {
        ++state.counters.queue_rejects;
        throw Error(Errc::QueueFull, "host_send: transmit queue full");
    }
    frame.src = ctx.self;
    state.tx_queue.push_back(std::move(frame));
    ++state.counters.frames_submitted;
    if (state.phase == MacPhase::Idle) {
        return start_next(state, ctx);
    }
    return {};
}

Actions handle_ack_timeout(MacState& state, const MacContext& ctx)
{
    if (state.phase != MacPhase::AwaitAck) {
        illegal(state, "AckTimeout");
    }
    return failed_attempt(state, ctx);
}

Actions mac_transition(MacState& state, const MacEvent& ev, const MacContext& ctx)
{
    using namespace event;
    return std::visit(
        [&](const auto& e) -> Actions {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, PrepareDone>) {
                if (state.phase == MacPhase::Prepare) {
                    state.phase = MacPhase::BasicSense;
                    return {action::BeginBasicSense{}};
                }
                if ((state.phase == MacPhase::Rx || state.phase == MacPhase::TxAck) &&
                    state.resume_phase == MacPhase::Prepare) {
                    state.deferred_prepare_done = true;
                    return {};
                }
                illegal(state, "PrepareDone");
            } else if constexpr (std::is_same_v<E, SenseDone>) {
                if (state.phase == MacPhase::BasicSense) {
                    if (e.status == ChannelStatus::Clear) {
                        return begin_data_tx(state);
                    }
                    state.phase = MacPhase::Backoff;
                    state.backoff_counter = draw_backoff(state.cw, ctx.backoff_rng);
                    return {action::BeginBasicSense{}};
                }
                if (state.phase == MacPhase::Backoff) {
                    if (e.status == ChannelStatus::Clear && --state.backoff_counter == 0) {
                        return begin_data_tx(state);
                    }
                    return {action::BeginBasicSense{}};
                }
                illegal(state, "SenseDone");
            } else if constexpr (std::is_same_v<E, DataTxDone>) {
                if (state.phase != MacPhase::TxData) {
                    illegal(state, "DataTxDone");
                }
                if (state.current_frame->dst == kBroadcastAddress) {
                    return complete_success(state, ctx, {});
                }
                state.phase = MacPhase::AwaitAck;
                return {action::ArmAckTimeout{
                    ctx.params.ack_timeout_for(state.current_frame->length(), ctx.switch_latency)}};
            } else if constexpr (std::is_same_v<E, CollisionDetected>) {
                if (state.phase != MacPhase::TxData) {
                    illegal(state, "CollisionDetected");
                }
                ++state.counters.collisions_detected;
                return failed_attempt(state, ctx);
            } else if constexpr (std::is_same_v<E, AckTimeout>) {
                if ((state.phase == MacPhase::Rx || state.phase == MacPhase::TxAck) &&
                    state.resume_phase == MacPhase::AwaitAck) {
                    state.deferred_ack_timeout = true;
                    return {};
                }
                return handle_ack_timeout(state, ctx);
            } else if constexpr (std::is_same_v<E, FrameDecoded>) {
                return on_frame(state, e.frame, ctx);
            } else if constexpr (std::is_same_v<E, RxProcDone>) {
                if (state.phase != MacPhase::Rx) {
                    illegal(state, "RxProcDone");
                }
                state.phase = MacPhase::TxAck;
                ++state.counters.tx_ack;
                Actions actions{action::DeliverUp{*state.pending_rx, state.pending_rx_duplicate},
                                action::BeginAckTx{build_ack(*state.pending_rx, ctx.self)}};
                return actions;
            } else if constexpr (std::is_same_v<E, AckTxDone>) {
                if (state.phase != MacPhase::TxAck) {
                    illegal(state, "AckTxDone");
                }
                state.pending_rx.reset();
                state.pending_rx_duplicate = false;
                return resume_after_ack(state, ctx);
            }
        },
        ev);
}

void ProtocolDemux::register_handler(ProtocolId protocol, DatagramHandler handler)
{
    handlers_[protocol] = std::move(handler);
}

DeliveryResult ProtocolDemux::deliver_up(const MacFrame& frame, MacCounters& counters) const
{
    auto it = handlers_.find(frame.protocol);
    if (it == handlers_.end()) {
        ++counters.rx_unknown_proto;
        return DeliveryResult::Dropped;
    }
    it->second(Datagram{frame.src, frame.protocol, frame.payload});
    return DeliveryResult::Routed;
}

}  // namespace openvlc::mac
