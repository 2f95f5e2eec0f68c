#include "openvlc/phy_codec.hpp"

#include <numeric>
#include <string>

namespace openvlc::phy {

namespace {

constexpr Symbol preamble_symbol(std::size_t i)
{
    return (i % 2 == 0) ? Symbol::High : Symbol::Low;
}

}  // namespace

std::vector<Symbol> manchester_encode(std::span<const std::uint8_t> bits)
{
    std::vector<Symbol> out;
    out.reserve(bits.size() * 2);
    for (auto bit : bits) {
        if (bit) {
            out.push_back(Symbol::Low);
            out.push_back(Symbol::High);
        } else {
            out.push_back(Symbol::High);
            out.push_back(Symbol::Low);
        }
    }
    return out;
}

std::vector<std::uint8_t> manchester_decode(std::span<const Symbol> symbols)
{
    if (symbols.size() % 2 != 0) {
        throw Error(Errc::OddLength,
                    "manchester_decode: odd symbol count " + std::to_string(symbols.size()));
    }
    std::vector<std::uint8_t> bits(symbols.size() / 2);
    for (std::size_t pair = 0; pair < bits.size(); ++pair) {
        const Symbol first = symbols[2 * pair];
        const Symbol second = symbols[2 * pair + 1];
        if (first == second) {
            throw Error(Errc::InvalidPair,
                        "manchester_decode: invalid pair at index " + std::to_string(pair), pair);
        }
        bits[pair] = (first == Symbol::Low) ? 1 : 0;
    }
    return bits;
}

void manchester_encode_bytes_into(std::span<const std::uint8_t> bytes, std::vector<Symbol>& out)
{
    out.reserve(out.size() + bytes.size() * 16);
    for (auto byte : bytes) {
        for (int bit = 7; bit >= 0; --bit) {
            if ((byte >> bit) & 1) {
                out.push_back(Symbol::Low);
                out.push_back(Symbol::High);
            } else {
                out.push_back(Symbol::High);
                out.push_back(Symbol::Low);
            }
        }
    }
}

std::vector<Symbol> manchester_encode_bytes(std::span<const std::uint8_t> bytes)
{
    std::vector<Symbol> out;
    manchester_encode_bytes_into(bytes, out);
    return out;
}

Bytes manchester_decode_bytes(std::span<const Symbol> symbols)
{
    if (symbols.size() % 16 != 0) {
        if (symbols.size() % 2 != 0) {
            throw Error(Errc::OddLength,
                        "manchester_decode_bytes: odd symbol count " + std::to_string(symbols.size()));
        }
        throw Error(Errc::WrongLength, "manchester_decode_bytes: symbol count is not a whole number of bytes");
    }
    Bytes out(symbols.size() / 16);
    for (std::size_t pair = 0; pair < symbols.size() / 2; ++pair) {
        const Symbol first = symbols[2 * pair];
        if (first == symbols[2 * pair + 1]) {
            throw Error(Errc::InvalidPair,
                        "manchester_decode_bytes: invalid pair at index " + std::to_string(pair), pair);
        }
        if (first == Symbol::Low) {
            out[pair / 8] |= static_cast<std::uint8_t>(0x80u >> (pair % 8));
        }
    }
    return out;
}

std::vector<Symbol> build_sync_header()
{
    std::vector<Symbol> header;
    header.reserve(kSyncHeaderLength);
    for (std::size_t i = 0; i < kPreambleLength; ++i) {
        header.push_back(preamble_symbol(i));
    }
    header.insert(header.end(), kSfdPattern.begin(), kSfdPattern.end());
    return header;
}

double compute_threshold(std::span<const AdcSample> preamble_samples)
{
    if (preamble_samples.size() != kPreambleLength) {
        throw Error(Errc::WrongLength, "compute_threshold: expected 24 samples, got " +
                                           std::to_string(preamble_samples.size()));
    }
    std::uint64_t sum = 0;
    for (auto s : preamble_samples) {
        sum += s.counts;
    }
    return static_cast<double>(sum) / static_cast<double>(kPreambleLength);
}

std::vector<Symbol> slice_samples(std::span<const AdcSample> samples, double threshold)
{
    std::vector<Symbol> out;
    out.reserve(samples.size());
    for (auto s : samples) {
        out.push_back(slice_sample(s, threshold));
    }
    return out;
}

SyncResult locate_frame(std::span<const AdcSample> samples, const SyncConfig& config)
{
    if (samples.size() >= kSyncHeaderLength) {
        // Sliding sum keeps the scan linear in the window count.
        std::uint64_t window_sum = 0;
        for (std::size_t i = 0; i < kPreambleLength; ++i) {
            window_sum += samples[i].counts;
        }
        const std::size_t last_start = samples.size() - kSyncHeaderLength;
        for (std::size_t start = 0;; ++start) {
            const double threshold =
                static_cast<double>(window_sum) / static_cast<double>(kPreambleLength);

            std::size_t matches = 0;
            for (std::size_t i = 0; i < kPreambleLength; ++i) {
                if (slice_sample(samples[start + i], threshold) == preamble_symbol(i)) {
                    ++matches;
                }
            }
            if (matches >= config.min_preamble_matches) {
                bool sfd_ok = true;
                for (std::size_t i = 0; i < kSfdLength && sfd_ok; ++i) {
                    sfd_ok = slice_sample(samples[start + kPreambleLength + i], threshold) == kSfdPattern[i];
                }
                if (sfd_ok) {
                    return SyncResult{start + kSyncHeaderLength, threshold};
                }
            }

            if (start == last_start) {
                break;
            }
            window_sum -= samples[start].counts;
            window_sum += samples[start + kPreambleLength].counts;
        }
    }
    throw Error(Errc::NoSync, "locate_frame: no preamble/SFD found in " +
                                  std::to_string(samples.size()) + " samples");
}

}  // namespace openvlc::phy
