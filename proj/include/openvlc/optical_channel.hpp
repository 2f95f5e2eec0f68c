#pragma once

// Shared half-duplex optical medium.
//
// Each node owns one LED that is either emitting (TX) or receiving (RX);
// every mode change takes switch_latency to complete, during which the LED
// can neither emit nor sample. Received light is the gain-weighted sum of all
// other emitters plus ambient light and Gaussian noise, quantized by the ADC.
//
// Emissions are registered as whole symbol runs, so the channel can answer
// sample() for any instant, past or planned, without per-symbol events.
// A frame registered with fast sensing enabled implicitly flips the LED to RX
// inside every LOW symbol, leaving [slot + latency, slot + period - latency).

#include <cstdint>
#include <deque>
#include <memory>
#include <vector>

#include "openvlc/common.hpp"
#include "openvlc/phy_codec.hpp"
#include "openvlc/sim_kernel.hpp"

namespace openvlc::channel {

enum class LedMode : std::uint8_t { Tx, Rx };

enum class LedState : std::uint8_t { Tx, Rx, Switching };

struct ChannelParams {
    // gain[emitter][receiver]; the diagonal is ignored.
    std::vector<std::vector<double>> gain;
    std::vector<double> ambient;
    std::vector<double> noise_sigma;
    int adc_bits = 10;
    double full_scale = 1.0;
    Duration switch_latency = microseconds(2);
    double intensity_high = 1.0;
    double intensity_low = 0.0;

    /// Every link gets `link_gain`; per-node ambient and noise are uniform.
    static ChannelParams uniform(std::size_t nodes, double link_gain, double ambient = 0.1,
                                 double noise_sigma = 0.01);

    std::size_t node_count() const noexcept { return gain.size(); }

    /// Throws Error{ValidationError} describing the first violated invariant.
    void validate(Duration symbol_period) const;
};

struct ModeRecord {
    SimTime requested_at{};
    SimTime effective_at{};
    LedMode mode = LedMode::Rx;
};

using SymbolRun = std::shared_ptr<const std::vector<phy::Symbol>>;

struct Emission {
    std::uint64_t id = 0;
    NodeId node = 0;
    SimTime start{};
    SimTime end{};  // exclusive; moves earlier if the emission is truncated
    Duration symbol_period{};
    SymbolRun symbols;
    bool fast_sense = false;

    SimTime planned_end() const noexcept
    {
        return start + symbol_period * static_cast<std::int64_t>(symbols->size());
    }
};

/// Inverse-square line-of-sight gain, g0 / d^2.
double link_gain(double distance_m, double g0);

class OpticalChannel {
public:
    OpticalChannel(ChannelParams params, Duration symbol_period);

    const ChannelParams& params() const noexcept { return params_; }
    Duration symbol_period() const noexcept { return symbol_period_; }
    std::size_t node_count() const noexcept { return params_.node_count(); }
    std::uint16_t max_count() const noexcept { return max_count_; }

    /// Returns the time the new mode takes effect. Requesting the mode the
    /// LED is already in is a no-op that returns `now`.
    SimTime set_mode(NodeId node, LedMode mode, SimTime now);

    LedState state_at(NodeId node, SimTime t) const;

    /// Emits one symbol. Error{NotInTxMode} unless the LED is in TX mode for
    /// the whole interval.
    std::uint64_t emit(NodeId node, phy::Symbol symbol, SimTime start, Duration duration);

    /// Registers a run of symbols starting at `start`; returns the emission id.
    std::uint64_t emit_frame(NodeId node, SimTime start, SymbolRun symbols, bool fast_sense);

    /// Cuts an emission short. If the cut lands in a fast-sensing receive
    /// window the LED stays in RX from `at` onwards.
    void truncate(NodeId node, std::uint64_t emission_id, SimTime at);

    const Emission* find_emission(NodeId node, std::uint64_t emission_id) const;
    const Emission* emission_at(NodeId node, SimTime t) const;

    /// Emitted intensity of `node` at t (dark when not emitting).
    double intensity(NodeId node, SimTime t) const;

    /// Noiseless light at `receiver`'s photodetector, ambient included.
    double received_intensity(NodeId receiver, SimTime t) const;

    phy::AdcSample quantize(double intensity) const;

    /// Error{NotInRxMode} unless the LED is in RX mode at t.
    phy::AdcSample sample(NodeId node, SimTime t, sim::RngStream& noise) const;

    /// Drops emission and mode history that ended before `t`.
    void forget_before(SimTime t);

private:
    void check_node(NodeId node) const;
    LedMode base_mode_at(NodeId node, SimTime t, SimTime* effective) const;

    ChannelParams params_;
    Duration symbol_period_;
    std::uint16_t max_count_;
    std::uint64_t next_emission_id_ = 1;
    std::vector<std::deque<ModeRecord>> modes_;
    std::vector<std::deque<Emission>> emissions_;
};

}  // namespace openvlc::channel
