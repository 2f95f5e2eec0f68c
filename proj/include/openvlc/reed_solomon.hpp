#pragma once

// Shortened systematic Reed-Solomon over GF(2^8).
//
// Field polynomial x^8+x^4+x^3+x^2+1 (0x11D), primitive element alpha = 2,
// generator roots alpha^0..alpha^15 (first consecutive root 0). Blocks carry
// up to 200 data bytes and 16 parity bytes, i.e. RS(255,239) shortened by
// implicit leading zeros; a full block is RS(216,200).

#include <cstdint>
#include <span>

#include "openvlc/common.hpp"

namespace openvlc::fec {

inline constexpr std::size_t kRsParityBytes = 16;
inline constexpr std::size_t kRsMaxDataBytes = 200;
inline constexpr std::size_t kRsMaxCorrectable = kRsParityBytes / 2;

struct RsDecoded {
    Bytes data;
    std::size_t corrected = 0;
};

/// Returns data followed by 16 parity bytes. Error{BlockTooLarge} if the
/// block is empty or longer than 200 bytes.
Bytes rs_encode_block(std::span<const std::uint8_t> data);

/// Corrects up to 8 byte errors at unknown positions. Error{Uncorrectable}
/// when the syndrome cannot be explained by at most 8 in-block errors.
RsDecoded rs_decode_block(std::span<const std::uint8_t> coded);

}  // namespace openvlc::fec
