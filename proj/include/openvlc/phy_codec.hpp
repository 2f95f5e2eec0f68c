#pragma once

// Line coding and frame synchronization for the OOK physical layer.
//
// A frame on the wire is a raw 32-symbol sync header (24 alternating preamble
// symbols starting HIGH, then an 8-symbol start-of-frame delimiter) followed
// by the Manchester-coded body. The receiver derives its slicing threshold
// from the mean of the preamble samples and holds it for the whole frame.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "openvlc/common.hpp"

namespace openvlc::phy {

enum class Symbol : std::uint8_t { Low = 0, High = 1 };

/// A quantized receiver reading in ADC counts.
struct AdcSample {
    std::uint16_t counts = 0;

    friend constexpr auto operator<=>(const AdcSample&, const AdcSample&) = default;
};

struct SyncResult {
    std::size_t payload_symbol_start = 0;  // first body symbol, just past the SFD
    double threshold = 0.0;
};

struct SyncConfig {
    std::size_t min_preamble_matches = 22;  // out of kPreambleLength
};

inline constexpr std::size_t kPreambleLength = 24;
inline constexpr std::size_t kSfdLength = 8;
inline constexpr std::size_t kSyncHeaderLength = kPreambleLength + kSfdLength;

inline constexpr std::array<Symbol, kSfdLength> kSfdPattern = {
    Symbol::High, Symbol::High, Symbol::Low, Symbol::Low,
    Symbol::High, Symbol::Low,  Symbol::Low, Symbol::High,
};

/// Bits are given one per element; any nonzero value is a 1.
/// 1 -> LOW,HIGH and 0 -> HIGH,LOW.
std::vector<Symbol> manchester_encode(std::span<const std::uint8_t> bits);

/// Throws Error{OddLength} or Error{InvalidPair, index} on a non-Manchester pair.
std::vector<std::uint8_t> manchester_decode(std::span<const Symbol> symbols);

// Byte-level conveniences, MSB first.
std::vector<Symbol> manchester_encode_bytes(std::span<const std::uint8_t> bytes);
void manchester_encode_bytes_into(std::span<const std::uint8_t> bytes, std::vector<Symbol>& out);
Bytes manchester_decode_bytes(std::span<const Symbol> symbols);

std::vector<Symbol> build_sync_header();

/// Mean of exactly kPreambleLength samples; Error{WrongLength} otherwise.
double compute_threshold(std::span<const AdcSample> preamble_samples);

/// Ties resolve HIGH.
constexpr Symbol slice_sample(AdcSample sample, double threshold)
{
    return static_cast<double>(sample.counts) >= threshold ? Symbol::High : Symbol::Low;
}

std::vector<Symbol> slice_samples(std::span<const AdcSample> samples, double threshold);

/// Earliest window whose mean-threshold slicing matches the alternating
/// preamble in at least `min_preamble_matches` positions and is followed by an
/// exact SFD. Error{NoSync} when nothing matches.
SyncResult locate_frame(std::span<const AdcSample> samples, const SyncConfig& config = {});

}  // namespace openvlc::phy
