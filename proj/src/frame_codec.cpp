#include "openvlc/frame_codec.hpp"

#include <array>
#include <optional>
#include <string>

#include "openvlc/reed_solomon.hpp"

namespace openvlc::frame {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table()
{
    std::array<std::uint16_t, 256> table{};
    for (unsigned i = 0; i < 256; ++i) {
        std::uint16_t reg = static_cast<std::uint16_t>(i << 8);
        for (int bit = 0; bit < 8; ++bit) {
            reg = (reg & 0x8000) ? static_cast<std::uint16_t>((reg << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(reg << 1);
        }
        table[i] = reg;
    }
    return table;
}

constexpr auto kCrcTable = make_crc_table();

void put_u16(Bytes& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::uint16_t get_u16(std::span<const std::uint8_t> bytes, std::size_t offset)
{
    return static_cast<std::uint16_t>((bytes[offset] << 8) | bytes[offset + 1]);
}

DecodedFrame decode_with_size(std::span<const phy::Symbol> body, std::size_t serialized)
{
    const std::size_t coded = coded_byte_count(serialized);
    if (body.size() < coded * kSymbolsPerByte) {
        throw Error(Errc::BadLength, "symbols_to_frame: " + std::to_string(body.size()) +
                                         " symbols, frame needs " + std::to_string(coded * kSymbolsPerByte));
    }
    const Bytes coded_bytes = phy::manchester_decode_bytes(body.first(coded * kSymbolsPerByte));

    DecodedFrame result;
    result.coded_bytes = coded;
    Bytes serialized_bytes;
    serialized_bytes.reserve(serialized);
    std::size_t remaining = serialized;
    std::size_t offset = 0;
    while (remaining > 0) {
        const std::size_t data_len = std::min(remaining, fec::kRsMaxDataBytes);
        const std::size_t block_len = data_len + fec::kRsParityBytes;
        auto block = fec::rs_decode_block(std::span(coded_bytes).subspan(offset, block_len));
        result.corrected_bytes += block.corrected;
        serialized_bytes.insert(serialized_bytes.end(), block.data.begin(), block.data.end());
        offset += block_len;
        remaining -= data_len;
    }
    result.frame = frame_parse(serialized_bytes);
    return result;
}

}  // namespace

std::vector<phy::Symbol> CodedFrame::concatenated() const
{
    std::vector<phy::Symbol> all;
    all.reserve(symbol_count());
    all.insert(all.end(), sync_header.begin(), sync_header.end());
    all.insert(all.end(), body_symbols.begin(), body_symbols.end());
    return all;
}

std::uint16_t crc16(std::span<const std::uint8_t> data)
{
    std::uint16_t reg = 0xFFFF;
    for (auto byte : data) {
        reg = static_cast<std::uint16_t>((reg << 8) ^ kCrcTable[((reg >> 8) ^ byte) & 0xFF]);
    }
    return reg;
}

std::size_t coded_byte_count(std::size_t serialized_bytes)
{
    const std::size_t blocks = (serialized_bytes + fec::kRsMaxDataBytes - 1) / fec::kRsMaxDataBytes;
    return serialized_bytes + fec::kRsParityBytes * blocks;
}

std::size_t frame_symbol_count(std::size_t payload_length)
{
    return phy::kSyncHeaderLength + kSymbolsPerByte * coded_byte_count(serialized_size(payload_length));
}

std::size_t serialized_size_for_coded(std::size_t coded_bytes)
{
    // Each full block contributes 216 coded bytes; the tail block d + 16.
    const std::size_t full_block = fec::kRsMaxDataBytes + fec::kRsParityBytes;
    const std::size_t full_blocks = coded_bytes / full_block;
    const std::size_t tail = coded_bytes % full_block;
    if (tail == 0) {
        return full_blocks * fec::kRsMaxDataBytes;
    }
    if (tail <= fec::kRsParityBytes) {
        return 0;
    }
    return full_blocks * fec::kRsMaxDataBytes + (tail - fec::kRsParityBytes);
}

Bytes frame_serialize(const MacFrame& frame, std::size_t max_payload)
{
    if (frame.payload.size() > max_payload || frame.payload.size() > 0xFFFF) {
        throw Error(Errc::PayloadTooLarge, "frame_serialize: payload of " +
                                               std::to_string(frame.payload.size()) + " bytes exceeds " +
                                               std::to_string(max_payload));
    }
    Bytes out;
    out.reserve(serialized_size(frame.payload.size()));
    put_u16(out, static_cast<std::uint16_t>(frame.payload.size()));
    put_u16(out, frame.dst);
    put_u16(out, frame.src);
    put_u16(out, frame.protocol);
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    put_u16(out, crc16(out));
    return out;
}

MacFrame frame_parse(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kFrameOverheadBytes) {
        throw Error(Errc::BadLength, "frame_parse: " + std::to_string(bytes.size()) + " bytes is below the minimum");
    }
    const std::size_t declared = get_u16(bytes, 0);
    if (declared != bytes.size() - kFrameOverheadBytes) {
        throw Error(Errc::BadLength, "frame_parse: declared length " + std::to_string(declared) +
                                         " does not match " + std::to_string(bytes.size() - kFrameOverheadBytes));
    }
    const std::size_t crc_offset = bytes.size() - kCrcBytes;
    if (crc16(bytes.first(crc_offset)) != get_u16(bytes, crc_offset)) {
        throw Error(Errc::BadCrc, "frame_parse: CRC mismatch");
    }
    MacFrame frame;
    frame.dst = get_u16(bytes, 2);
    frame.src = get_u16(bytes, 4);
    frame.protocol = get_u16(bytes, 6);
    frame.payload.assign(bytes.begin() + kHeaderBytes, bytes.begin() + static_cast<std::ptrdiff_t>(crc_offset));
    return frame;
}

Bytes fec_encode(std::span<const std::uint8_t> serialized)
{
    Bytes coded;
    coded.reserve(coded_byte_count(serialized.size()));
    for (std::size_t offset = 0; offset < serialized.size(); offset += fec::kRsMaxDataBytes) {
        const std::size_t len = std::min(fec::kRsMaxDataBytes, serialized.size() - offset);
        const Bytes block = fec::rs_encode_block(serialized.subspan(offset, len));
        coded.insert(coded.end(), block.begin(), block.end());
    }
    return coded;
}

CodedFrame frame_to_symbols(const MacFrame& frame, std::size_t max_payload)
{
    const Bytes serialized = frame_serialize(frame, max_payload);
    const Bytes coded = fec_encode(serialized);
    CodedFrame out;
    out.sync_header = phy::build_sync_header();
    phy::manchester_encode_bytes_into(coded, out.body_symbols);
    return out;
}

DecodedFrame symbols_to_frame_detailed(std::span<const phy::Symbol> body_symbols, std::size_t max_payload)
{
    // The first two coded bytes are the (systematic) Length field. If they are
    // damaged the symbol count still pins down D, so that is tried second.
    std::optional<std::size_t> from_header;
    if (body_symbols.size() >= 2 * kSymbolsPerByte) {
        const Bytes head = phy::manchester_decode_bytes(body_symbols.first(2 * kSymbolsPerByte));
        const std::size_t length = (static_cast<std::size_t>(head[0]) << 8) | head[1];
        if (length <= max_payload) {
            from_header = serialized_size(length);
        }
    }
    std::optional<std::size_t> from_count;
    if (body_symbols.size() % kSymbolsPerByte == 0) {
        const std::size_t d = serialized_size_for_coded(body_symbols.size() / kSymbolsPerByte);
        if (d >= kFrameOverheadBytes && d - kFrameOverheadBytes <= max_payload) {
            from_count = d;
        }
    }

    if (!from_header && !from_count) {
        throw Error(Errc::BadLength, "symbols_to_frame: " + std::to_string(body_symbols.size()) +
                                         " symbols do not describe a frame");
    }
    if (from_header) {
        try {
            return decode_with_size(body_symbols, *from_header);
        } catch (const Error&) {
            if (!from_count || *from_count == *from_header) {
                throw;
            }
        }
    }
    return decode_with_size(body_symbols, *from_count);
}

MacFrame symbols_to_frame(std::span<const phy::Symbol> body_symbols, std::size_t max_payload)
{
    return symbols_to_frame_detailed(body_symbols, max_payload).frame;
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xF]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Bytes out;
    int high = -1;
    for (char c : hex) {
        if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
            continue;
        }
        const int v = nibble(c);
        if (v < 0) {
            throw Error(Errc::ParseError, std::string("from_hex: invalid character '") + c + "'");
        }
        if (high < 0) {
            high = v;
        } else {
            out.push_back(static_cast<std::uint8_t>((high << 4) | v));
            high = -1;
        }
    }
    if (high >= 0) {
        throw Error(Errc::ParseError, "from_hex: odd number of hex digits");
    }
    return out;
}

}  // namespace openvlc::frame
