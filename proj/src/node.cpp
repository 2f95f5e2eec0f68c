#include "openvlc/node.hpp"

#include <algorithm>

namespace openvlc::mac {

namespace {

// Samples taken before the locked emission starts, so the preamble search
// does not begin exactly on the first symbol.
constexpr int kPreRollSymbols = 4;

// A LOW symbol's busy verdict is acted on while the next symbol is already on
// the air; the emission stops at the end of that symbol.
constexpr std::int64_t kAbortLagSymbols = 1;

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

const char* failure_reason(Errc code)
{
    switch (code) {
    case Errc::Uncorrectable: return "rs";
    case Errc::BadCrc:
    case Errc::BadLength: return "crc";
    default: return "sync";
    }
}

}  // namespace

ChannelStatus fast_sense(const channel::OpticalChannel& ch, NodeId node, SimTime t, double threshold,
                         sim::RngStream& noise)
{
    if (ch.state_at(node, t) != channel::LedState::Rx) {
        throw Error(Errc::HalfDuplexViolation, "fast_sense: LED is not receiving");
    }
    const auto s = ch.sample(node, t, noise);
    return phy::slice_sample(s, threshold) == phy::Symbol::High ? ChannelStatus::Busy : ChannelStatus::Clear;
}

ChannelStatus basic_sense(const channel::OpticalChannel& ch, NodeId node, SimTime window_start, int symbols,
                          double threshold, sim::RngStream& noise)
{
    const Duration ts = ch.symbol_period();
    for (int k = 0; k < symbols; ++k) {
        if (ch.state_at(node, window_start + k * ts) != channel::LedState::Rx) {
            throw Error(Errc::HalfDuplexViolation, "basic_sense: LED is not receiving");
        }
    }
    bool busy = false;
    for (int k = 0; k < symbols; ++k) {
        const SimTime t = window_start + k * ts + ts / 2;
        busy = (fast_sense(ch, node, t, threshold, noise) == ChannelStatus::Busy) || busy;
    }
    return busy ? ChannelStatus::Busy : ChannelStatus::Clear;
}

Node::Node(NodeId id, Address address, MacParams params, Medium& medium, std::uint64_t root_seed, TraceFn trace)
    : id_(id),
      address_(address),
      params_(std::move(params)),
      medium_(medium),
      sched_(medium.scheduler()),
      channel_(medium.channel()),
      backoff_rng_(root_seed, id, sim::RngPurpose::Backoff),
      noise_rng_(root_seed, id, sim::RngPurpose::Noise),
      trace_(std::move(trace))
{
    params_.validate();
    if (address_ == kBroadcastAddress) {
        throw Error(Errc::ValidationError, "node address 0xFFFF is reserved for broadcast");
    }
    state_ = make_initial_state(params_);
}

MacContext Node::context()
{
    return MacContext{params_, address_, channel_.params().switch_latency, backoff_rng_};
}

double Node::sense_threshold() const
{
    return last_threshold_.value_or(static_cast<double>(channel_.max_count()) / 2.0);
}

void Node::trace(const std::string& kind, nlohmann::json detail)
{
    if (trace_) {
        trace_(TraceEvent{sched_.now(), static_cast<std::int64_t>(id_), kind, std::move(detail)});
    }
}

void Node::host_send(Address dst, ProtocolId protocol, Bytes payload)
{
    MacFrame f{dst, address_, protocol, std::move(payload)};
    apply(host_enqueue(state_, std::move(f), context()));
}

void Node::dispatch(const MacEvent& ev)
{
    apply(mac_transition(state_, ev, context()));
}

void Node::apply(Actions actions)
{
    for (auto& act : actions) {
        std::visit(
            [&](auto& a) {
                using A = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<A, action::BeginPrepare>) {
                    sched_.schedule(a.delay, static_cast<std::int64_t>(id_), sim::EventKind::Processing,
                                    [this] { dispatch(event::PrepareDone{}); });
                } else if constexpr (std::is_same_v<A, action::BeginBasicSense>) {
                    start_basic_sense();
                } else if constexpr (std::is_same_v<A, action::BeginDataTx>) {
                    start_data_tx(a.frame, a.attempt);
                } else if constexpr (std::is_same_v<A, action::ArmAckTimeout>) {
                    ack_timer_ = sched_.schedule(a.timeout, static_cast<std::int64_t>(id_),
                                                 sim::EventKind::AckTimeout, [this] {
                                                     ack_timer_ = {};
                                                     trace("ack_timeout");
                                                     dispatch(event::AckTimeout{});
                                                 });
                } else if constexpr (std::is_same_v<A, action::CancelAckTimeout>) {
                    sched_.cancel(ack_timer_);
                    ack_timer_ = {};
                } else if constexpr (std::is_same_v<A, action::BeginRxProc>) {
                    sched_.schedule(a.delay, static_cast<std::int64_t>(id_), sim::EventKind::Processing,
                                    [this] { dispatch(event::RxProcDone{}); });
                } else if constexpr (std::is_same_v<A, action::BeginAckTx>) {
                    start_ack_tx(a.ack);
                } else if constexpr (std::is_same_v<A, action::DeliverUp>) {
                    trace("deliver", {{"src", a.frame.src},
                                      {"protocol", a.frame.protocol},
                                      {"bytes", a.frame.length()},
                                      {"duplicate", a.duplicate}});
                    demux_.deliver_up(a.frame, state_.counters);
                } else if constexpr (std::is_same_v<A, action::FrameAcked>) {
                    trace("acked", {{"dst", a.frame.dst}, {"bytes", a.frame.length()}});
                    if (on_frame_acked) {
                        on_frame_acked(a.frame);
                    }
                } else if constexpr (std::is_same_v<A, action::FrameDropped>) {
                    trace("drop", {{"dst", a.frame.dst}, {"bytes", a.frame.length()}});
                    if (on_frame_dropped) {
                        on_frame_dropped(a.frame);
                    }
                } else if constexpr (std::is_same_v<A, action::AbandonSense>) {
                    sched_.cancel(sense_event_);
                    sense_event_ = {};
                }
            },
            act);
    }
}

void Node::switch_to_rx(SimTime now)
{
    rx_ready_at_ = channel_.set_mode(id_, channel::LedMode::Rx, now);
}

void Node::start_basic_sense()
{
    const SimTime window_start = std::max({sched_.now(), rx_ready_at_, driver_busy_until_});
    const Duration window = params_.symbol_period * params_.basic_sense_symbols;
    sense_event_ = sched_.schedule_at(window_start + window, static_cast<std::int64_t>(id_),
                                      sim::EventKind::SenseWindowEnd, [this, window_start] {
                                          sense_event_ = {};
                                          const auto status =
                                              basic_sense(channel_, id_, window_start, params_.basic_sense_symbols,
                                                          sense_threshold(), noise_rng_);
                                          dispatch(event::SenseDone{status});
                                      });
}

void Node::start_data_tx(const MacFrame& frame, int attempt)
{
    capture_.reset();
    if (!coded_symbols_ || !(coded_frame_ == frame)) {
        coded_frame_ = frame;
        coded_symbols_ = std::make_shared<const std::vector<phy::Symbol>>(
            frame::frame_to_symbols(frame, params_.max_payload).concatenated());
    }
    const SimTime start = channel_.set_mode(id_, channel::LedMode::Tx, sched_.now());
    data_emission_ = medium_.start_emission(id_, start, coded_symbols_, true);
    const auto* e = channel_.find_emission(id_, data_emission_);
    trace("tx_data", {{"dst", frame.dst}, {"bytes", frame.length()}, {"attempt", attempt},
                      {"start_us", to_microseconds(start)}});
    data_done_event_ = sched_.schedule_at(e->end, static_cast<std::int64_t>(id_), sim::EventKind::Timer,
                                          [this] { finish_data_tx(); });
    fast_sense_log_.clear();
    plan_fast_sense(start);
}

void Node::finish_data_tx()
{
    data_done_event_ = {};
    sched_.cancel(abort_event_);
    abort_event_ = {};
    data_emission_ = 0;
    switch_to_rx(sched_.now());
    dispatch(event::DataTxDone{});
}

void Node::collision_abort()
{
    abort_event_ = {};
    medium_.abort_emission(id_, data_emission_, sched_.now());
    sched_.cancel(data_done_event_);
    data_done_event_ = {};
    data_emission_ = 0;
    switch_to_rx(sched_.now());
    trace("collision");
    dispatch(event::CollisionDetected{});
}

void Node::plan_fast_sense(SimTime from)
{
    if (data_emission_ == 0) {
        return;
    }
    const auto* e = channel_.find_emission(id_, data_emission_);
    if (e == nullptr || from >= e->end) {
        return;
    }
    if (abort_event_.valid() && abort_decided_at_ < from) {
        return;
    }
    sched_.cancel(abort_event_);
    abort_event_ = {};

    std::erase_if(fast_sense_log_, [from](const FastSenseSample& s) { return s.at >= from; });
    int consecutive = 0;
    for (auto it = fast_sense_log_.rbegin(); it != fast_sense_log_.rend() && it->busy; ++it) {
        ++consecutive;
    }

    const Duration ts = e->symbol_period;
    const Duration half = ts / 2;
    std::int64_t k = 0;
    if (from > e->start + half) {
        k = (from - e->start - half + ts - Duration{1}) / ts;
    }
    const double threshold = sense_threshold();
    const auto& symbols = *e->symbols;
    for (; k < static_cast<std::int64_t>(symbols.size()); ++k) {
        if (symbols[static_cast<std::size_t>(k)] != phy::Symbol::Low) {
            continue;
        }
        const SimTime t = e->start + k * ts + half;
        if (t >= e->end) {
            break;
        }
        const bool busy = fast_sense(channel_, id_, t, threshold, noise_rng_) == ChannelStatus::Busy;
        fast_sense_log_.push_back(FastSenseSample{t, busy});
        consecutive = busy ? consecutive + 1 : 0;
        if (consecutive >= params_.collision_busy_symbols) {
            const SimTime stop = e->start + (k + 1 + kAbortLagSymbols) * ts;
            if (stop < e->end) {
                abort_decided_at_ = t;
                abort_event_ = sched_.schedule_at(stop, static_cast<std::int64_t>(id_),
                                                  sim::EventKind::SymbolBoundary, [this] { collision_abort(); });
            }
            return;
        }
    }
}

void Node::start_ack_tx(const MacFrame& ack)
{
    capture_.reset();
    auto symbols = std::make_shared<const std::vector<phy::Symbol>>(
        frame::frame_to_symbols(ack, params_.max_payload).concatenated());
    const SimTime start = channel_.set_mode(id_, channel::LedMode::Tx, sched_.now());
    const auto id = medium_.start_emission(id_, start, std::move(symbols), false);
    const auto* e = channel_.find_emission(id_, id);
    trace("tx_ack", {{"dst", ack.dst}, {"start_us", to_microseconds(start)}});
    sched_.schedule_at(e->end, static_cast<std::int64_t>(id_), sim::EventKind::Timer, [this] {
        switch_to_rx(sched_.now());
        dispatch(event::AckTxDone{});
    });
}

void Node::on_emission_start(const channel::Emission& e)
{
    if (e.node == id_ || capture_ || !receptive(state_.phase)) {
        return;
    }
    capture_ = Capture{e.id, e.node};
}

void Node::on_emission_end(const channel::Emission& e)
{
    if (!capture_ || capture_->emission_id != e.id) {
        return;
    }
    capture_.reset();
    decode_capture(e);
}

void Node::on_channel_changed(SimTime from)
{
    if (state_.phase == MacPhase::TxData) {
        plan_fast_sense(from);
    }
}

void Node::decode_capture(const channel::Emission& e)
{
    const Duration ts = e.symbol_period;
    const Duration half = ts / 2;
    auto available = [&](SimTime t) {
        return t >= SimTime{0} && channel_.state_at(id_, t) == channel::LedState::Rx;
    };

    int pre_roll = 0;
    while (pre_roll < kPreRollSymbols && available(e.start - (pre_roll + 1) * ts + half)) {
        ++pre_roll;
    }
    std::vector<phy::AdcSample> samples;
    samples.reserve(static_cast<std::size_t>(pre_roll) + e.symbols->size());
    for (int k = pre_roll; k >= 1; --k) {
        samples.push_back(channel_.sample(id_, e.start - k * ts + half, noise_rng_));
    }
    for (std::int64_t k = 0;; ++k) {
        const SimTime t = e.start + k * ts + half;
        if (t >= e.end || !available(t)) {
            break;
        }
        samples.push_back(channel_.sample(id_, t, noise_rng_));
    }

    frame::DecodedFrame decoded;
    try {
        const auto sync = phy::locate_frame(samples);
        last_threshold_ = sync.threshold;
        const auto body = phy::slice_samples(std::span(samples).subspan(sync.payload_symbol_start),
                                             sync.threshold);
        decoded = frame::symbols_to_frame_detailed(body, params_.max_payload);
    } catch (const Error& err) {
        const char* reason = failure_reason(err.code());
        switch (err.code()) {
        case Errc::Uncorrectable: ++state_.counters.rx_rs_fail; break;
        case Errc::BadCrc:
        case Errc::BadLength: ++state_.counters.rx_crc_fail; break;
        default: ++state_.counters.rx_sync_fail; break;
        }
        trace("rx_fail", {{"from_node", e.node}, {"reason", reason}, {"error", to_string(err.code())}});
        return;
    }

    const MacFrame& f = decoded.frame;
    if (f.dst != address_ && f.dst != kBroadcastAddress) {
        // The driver only learns the destination after decoding, so an
        // overheard frame costs the same processing time; sensing waits.
        const SimTime busy_until = sched_.now() + params_.processing_time(decoded.coded_bytes);
        if (busy_until > driver_busy_until_) {
            driver_busy_until_ = busy_until;
            if (sense_event_.valid()) {
                sched_.cancel(sense_event_);
                sense_event_ = {};
                start_basic_sense();
            }
        }
        return;
    }
    trace("rx", {{"src", f.src},
                 {"dst", f.dst},
                 {"bytes", f.length()},
                 {"ack", f.is_ack()},
                 {"corrected", decoded.corrected_bytes}});
    if (!f.is_ack() && !receptive(state_.phase)) {
        trace("rx_busy_drop", {{"src", f.src}});
        return;
    }
    dispatch(event::FrameDecoded{f});
}

}  // namespace openvlc::mac
