#pragma once

// MAC frame layout (all 16-bit fields big-endian):
//
//   Length | Dst | Src | Protocol | Payload (Length bytes) | CRC-16
//
// Length == 0 marks an ACK. The serialized frame (D = Length + 10 bytes) is
// cut into consecutive RS blocks of at most 200 bytes, each extended by 16
// parity bytes, then Manchester coded behind the raw sync header.

#include <cstdint>
#include <span>
#include <vector>

#include "openvlc/common.hpp"
#include "openvlc/phy_codec.hpp"

namespace openvlc::frame {

inline constexpr std::size_t kHeaderBytes = 8;
inline constexpr std::size_t kCrcBytes = 2;
inline constexpr std::size_t kFrameOverheadBytes = kHeaderBytes + kCrcBytes;
inline constexpr std::size_t kDefaultMaxPayload = 1500;
inline constexpr std::size_t kSymbolsPerByte = 16;

struct MacFrame {
    Address dst = 0;
    Address src = 0;
    ProtocolId protocol = 0;
    Bytes payload;

    std::size_t length() const noexcept { return payload.size(); }
    bool is_ack() const noexcept { return payload.empty(); }

    friend bool operator==(const MacFrame&, const MacFrame&) = default;
};

struct CodedFrame {
    std::vector<phy::Symbol> sync_header;
    std::vector<phy::Symbol> body_symbols;

    std::size_t symbol_count() const noexcept { return sync_header.size() + body_symbols.size(); }
    std::vector<phy::Symbol> concatenated() const;
};

struct DecodedFrame {
    MacFrame frame;
    std::size_t corrected_bytes = 0;
    std::size_t coded_bytes = 0;
};

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final XOR.
std::uint16_t crc16(std::span<const std::uint8_t> data);

/// Serialized bytes before FEC for a payload of `payload_length` bytes.
constexpr std::size_t serialized_size(std::size_t payload_length)
{
    return payload_length + kFrameOverheadBytes;
}

/// D + 16 * ceil(D / 200).
std::size_t coded_byte_count(std::size_t serialized_bytes);

/// Symbols on the wire, sync header included.
std::size_t frame_symbol_count(std::size_t payload_length);

/// Inverts the coded length law; returns 0 when no D produces `coded_bytes`.
std::size_t serialized_size_for_coded(std::size_t coded_bytes);

Bytes frame_serialize(const MacFrame& frame, std::size_t max_payload = kDefaultMaxPayload);

/// Error{BadLength} on size mismatch, Error{BadCrc} on checksum failure.
MacFrame frame_parse(std::span<const std::uint8_t> bytes);

/// RS-encodes serialized frame bytes block by block.
Bytes fec_encode(std::span<const std::uint8_t> serialized);

CodedFrame frame_to_symbols(const MacFrame& frame, std::size_t max_payload = kDefaultMaxPayload);

/// Body symbols (sync header already stripped) back to a frame. Trailing
/// symbols beyond the frame's coded length are ignored.
DecodedFrame symbols_to_frame_detailed(std::span<const phy::Symbol> body_symbols,
                                       std::size_t max_payload = kDefaultMaxPayload);

MacFrame symbols_to_frame(std::span<const phy::Symbol> body_symbols,
                          std::size_t max_payload = kDefaultMaxPayload);

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

}  // namespace openvlc::frame
