#include "openvlc/optical_channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace openvlc::channel {

ChannelParams ChannelParams::uniform(std::size_t nodes, double link_gain, double ambient, double noise_sigma)
{
    ChannelParams p;
    p.gain.assign(nodes, std::vector<double>(nodes, link_gain));
    for (std::size_t i = 0; i < nodes; ++i) {
        p.gain[i][i] = 0.0;
    }
    p.ambient.assign(nodes, ambient);
    p.noise_sigma.assign(nodes, noise_sigma);
    return p;
}

void ChannelParams::validate(Duration symbol_period) const
{
    auto fail = [](const std::string& what) { throw Error(Errc::ValidationError, what); };
    const std::size_t n = gain.size();
    if (n == 0) {
        fail("channel.gain: at least one node is required");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (gain[i].size() != n) {
            fail("channel.gain[" + std::to_string(i) + "]: row length must equal node count");
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!(gain[i][j] >= 0.0) || !std::isfinite(gain[i][j])) {
                fail("channel.gain[" + std::to_string(i) + "][" + std::to_string(j) + "]: must be >= 0");
            }
        }
    }
    if (ambient.size() != n || noise_sigma.size() != n) {
        fail("channel.ambient/noise_sigma: one entry per node is required");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(noise_sigma[i] >= 0.0)) {
            fail("channel.noise_sigma: must be >= 0");
        }
    }
    if (adc_bits < 1 || adc_bits > 16) {
        fail("channel.adc_bits: must be in 1..16");
    }
    if (!(full_scale > 0.0)) {
        fail("channel.full_scale: must be > 0");
    }
    if (switch_latency < Duration::zero()) {
        fail("channel.switch_latency_us: must be >= 0");
    }
    // Fast sensing needs TX->RX and RX->TX inside a single LOW symbol.
    if (2 * switch_latency >= symbol_period) {
        fail("channel.switch_latency_us: two switches must fit inside one symbol period");
    }
}

double link_gain(double distance_m, double g0)
{
    if (!(distance_m > 0.0)) {
        throw Error(Errc::NonPositiveDistance, "link_gain: distance must be positive");
    }
    return g0 / (distance_m * distance_m);
}

OpticalChannel::OpticalChannel(ChannelParams params, Duration symbol_period)
    : params_(std::move(params)),
      symbol_period_(symbol_period),
      max_count_(static_cast<std::uint16_t>((1u << params_.adc_bits) - 1u))
{
    params_.validate(symbol_period_);
    modes_.resize(node_count());
    emissions_.resize(node_count());
    for (auto& history : modes_) {
        history.push_back(ModeRecord{SimTime{0}, SimTime{0}, LedMode::Rx});
    }
}

void OpticalChannel::check_node(NodeId node) const
{
    if (node >= node_count()) {
        throw Error(Errc::UnknownNode, "optical channel: unknown node " + std::to_string(node));
    }
}

LedMode OpticalChannel::base_mode_at(NodeId node, SimTime t, SimTime* effective) const
{
    const auto& history = modes_[node];
    auto it = std::upper_bound(history.begin(), history.end(), t,
                               [](SimTime value, const ModeRecord& r) { return value < r.requested_at; });
    if (it == history.begin()) {
        *effective = SimTime{0};
        return history.front().mode;
    }
    --it;
    *effective = it->effective_at;
    return it->mode;
}

LedState OpticalChannel::state_at(NodeId node, SimTime t) const
{
    check_node(node);
    SimTime effective{};
    const LedMode mode = base_mode_at(node, t, &effective);
    if (t < effective) {
        return LedState::Switching;
    }
    if (mode == LedMode::Rx) {
        return LedState::Rx;
    }
    const Emission* e = emission_at(node, t);
    if (e == nullptr || !e->fast_sense) {
        return LedState::Tx;
    }
    const auto slot = (t - e->start) / e->symbol_period;
    if ((*e->symbols)[static_cast<std::size_t>(slot)] == phy::Symbol::High) {
        return LedState::Tx;
    }
    const SimTime slot_start = e->start + slot * e->symbol_period;
    const Duration latency = params_.switch_latency;
    if (t < slot_start + latency || t >= slot_start + e->symbol_period - latency) {
        return LedState::Switching;
    }
    return LedState::Rx;
}

SimTime OpticalChannel::set_mode(NodeId node, LedMode mode, SimTime now)
{
    check_node(node);
    auto& history = modes_[node];
    if (!history.empty() && now < history.back().requested_at) {
        throw Error(Errc::InvalidArgument, "set_mode: request precedes the previous one");
    }
    const LedState state = state_at(node, now);
    if ((state == LedState::Rx && mode == LedMode::Rx) || (state == LedState::Tx && mode == LedMode::Tx)) {
        if (history.back().mode != mode) {
            history.push_back(ModeRecord{now, now, mode});
        }
        return now;
    }
    const SimTime effective = now + params_.switch_latency;
    history.push_back(ModeRecord{now, effective, mode});
    return effective;
}

std::uint64_t OpticalChannel::emit(NodeId node, phy::Symbol symbol, SimTime start, Duration duration)
{
    check_node(node);
    if (duration <= Duration::zero()) {
        throw Error(Errc::InvalidArgument, "emit: duration must be positive");
    }
    // The LED has to hold TX for the whole symbol.
    SimTime effective{};
    const LedMode mode = base_mode_at(node, start, &effective);
    const auto& history = modes_[node];
    const bool later_change = std::any_of(history.begin(), history.end(), [&](const ModeRecord& r) {
        return r.requested_at > start && r.requested_at < start + duration;
    });
    if (mode != LedMode::Tx || start < effective || later_change) {
        throw Error(Errc::NotInTxMode, "emit: node " + std::to_string(node) + " is not in TX mode");
    }
    auto run = std::make_shared<const std::vector<phy::Symbol>>(1, symbol);
    auto& list = emissions_[node];
    if (!list.empty() && start < list.back().end) {
        throw Error(Errc::InvalidArgument, "emit: overlaps the node's previous emission");
    }
    const std::uint64_t id = next_emission_id_++;
    list.push_back(Emission{id, node, start, start + duration, duration, std::move(run), false});
    return id;
}

std::uint64_t OpticalChannel::emit_frame(NodeId node, SimTime start, SymbolRun symbols, bool fast_sense)
{
    check_node(node);
    if (!symbols || symbols->empty()) {
        throw Error(Errc::InvalidArgument, "emit_frame: empty symbol run");
    }
    SimTime effective{};
    const LedMode mode = base_mode_at(node, start, &effective);
    if (mode != LedMode::Tx || start < effective) {
        throw Error(Errc::NotInTxMode, "emit_frame: node " + std::to_string(node) + " is not in TX mode");
    }
    auto& list = emissions_[node];
    if (!list.empty() && start < list.back().end) {
        throw Error(Errc::InvalidArgument, "emit_frame: overlaps the node's previous emission");
    }
    Emission e{next_emission_id_++, node, start, {}, symbol_period_, std::move(symbols), fast_sense};
    e.end = e.planned_end();
    list.push_back(std::move(e));
    return list.back().id;
}

void OpticalChannel::truncate(NodeId node, std::uint64_t emission_id, SimTime at)
{
    check_node(node);
    for (auto& e : emissions_[node]) {
        if (e.id != emission_id) {
            continue;
        }
        if (at >= e.end) {
            return;
        }
        const bool in_rx_window = e.fast_sense && at >= e.start && state_at(node, at) == LedState::Rx;
        e.end = std::max(at, e.start);
        if (in_rx_window) {
            modes_[node].push_back(ModeRecord{at, at, LedMode::Rx});
        }
        return;
    }
    throw Error(Errc::InvalidArgument, "truncate: unknown emission");
}

const Emission* OpticalChannel::find_emission(NodeId node, std::uint64_t emission_id) const
{
    check_node(node);
    for (const auto& e : emissions_[node]) {
        if (e.id == emission_id) {
            return &e;
        }
    }
    return nullptr;
}

const Emission* OpticalChannel::emission_at(NodeId node, SimTime t) const
{
    const auto& list = emissions_[node];
    auto it = std::upper_bound(list.begin(), list.end(), t,
                               [](SimTime value, const Emission& e) { return value < e.start; });
    if (it == list.begin()) {
        return nullptr;
    }
    --it;
    return (t < it->end) ? &*it : nullptr;
}

double OpticalChannel::intensity(NodeId node, SimTime t) const
{
    check_node(node);
    const Emission* e = emission_at(node, t);
    if (e == nullptr) {
        return params_.intensity_low;
    }
    const auto slot = static_cast<std::size_t>((t - e->start) / e->symbol_period);
    return (*e->symbols)[slot] == phy::Symbol::High ? params_.intensity_high : params_.intensity_low;
}

double OpticalChannel::received_intensity(NodeId receiver, SimTime t) const
{
    check_node(receiver);
    double total = params_.ambient[receiver];
    for (NodeId emitter = 0; emitter < node_count(); ++emitter) {
        if (emitter == receiver) {
            continue;
        }
        const double g = params_.gain[emitter][receiver];
        if (g != 0.0) {
            total += g * intensity(emitter, t);
        }
    }
    return total;
}

phy::AdcSample OpticalChannel::quantize(double value) const
{
    const double clamped = std::clamp(value, 0.0, params_.full_scale);
    const double counts = std::round(clamped / params_.full_scale * static_cast<double>(max_count_));
    return phy::AdcSample{static_cast<std::uint16_t>(counts)};
}

phy::AdcSample OpticalChannel::sample(NodeId node, SimTime t, sim::RngStream& noise) const
{
    if (state_at(node, t) != LedState::Rx) {
        throw Error(Errc::NotInRxMode, "sample: node " + std::to_string(node) + " is not in RX mode");
    }
    double value = received_intensity(node, t);
    const double sigma = params_.noise_sigma[node];
    if (sigma > 0.0) {
        value += noise.normal(0.0, sigma);
    }
    return quantize(value);
}

void OpticalChannel::forget_before(SimTime t)
{
    for (auto& list : emissions_) {
        while (list.size() > 1 && list.front().end < t) {
            list.pop_front();
        }
    }
    for (auto& history : modes_) {
        while (history.size() > 1 && history[1].requested_at < t) {
            history.pop_front();
        }
    }
}

}  // namespace openvlc::channel
