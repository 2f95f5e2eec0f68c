#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace openvlc {

// Simulated time is integer nanoseconds since the start of a run.
using Duration = std::chrono::nanoseconds;
using SimTime = std::chrono::nanoseconds;

using Address = std::uint16_t;
using ProtocolId = std::uint16_t;
using NodeId = std::size_t;
using Bytes = std::vector<std::uint8_t>;

inline constexpr Address kBroadcastAddress = 0xFFFF;

constexpr Duration microseconds(double us)
{
    return Duration{static_cast<std::int64_t>(us * 1000.0 + (us >= 0 ? 0.5 : -0.5))};
}

constexpr Duration seconds(double s)
{
    return Duration{static_cast<std::int64_t>(s * 1e9 + (s >= 0 ? 0.5 : -0.5))};
}

constexpr double to_seconds(Duration d)
{
    return static_cast<double>(d.count()) * 1e-9;
}

constexpr double to_microseconds(Duration d)
{
    return static_cast<double>(d.count()) * 1e-3;
}

enum class Errc {
    InvalidPair,
    OddLength,
    WrongLength,
    NoSync,
    BlockTooLarge,
    Uncorrectable,
    PayloadTooLarge,
    InvalidPayload,
    BadLength,
    BadCrc,
    QueueFull,
    HalfDuplexViolation,
    IllegalEvent,
    UnknownNode,
    NotInRxMode,
    NotInTxMode,
    NonPositiveDistance,
    InvalidArgument,
    ParseError,
    ValidationError,
};

const char* to_string(Errc code);

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-checkable code. `index` is meaningful for positional errors
/// (InvalidPair reports the offending pair index).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, std::size_t index = 0)
        : std::runtime_error(what), code_(code), index_(index)
    {
    }

    Errc code() const noexcept { return code_; }
    std::size_t index() const noexcept { return index_; }

private:
    Errc code_;
    std::size_t index_;
};

}  // namespace openvlc
