#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "golden.hpp"
#include "openvlc/frame_codec.hpp"

using namespace openvlc;
using namespace openvlc::frame;
using phy::Symbol;

namespace {

MacFrame make_frame(std::size_t len, std::uint64_t seed = 1)
{
    std::mt19937_64 rng(seed);
    MacFrame f{0x0002, 0x0001, 0x0011, Bytes(len)};
    for (auto& b : f.payload) {
        b = static_cast<std::uint8_t>(rng());
    }
    return f;
}

Errc error_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an openvlc::Error");
    return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("round trip through symbols for boundary payload lengths")
{
    for (std::size_t len : {0u, 1u, 50u, 199u, 200u, 201u, 1000u, 1500u}) {
        CAPTURE(len);
        const MacFrame f = make_frame(len, len + 1);
        const CodedFrame coded = frame_to_symbols(f);
        CHECK(coded.sync_header == phy::build_sync_header());
        CHECK(coded.symbol_count() == frame_symbol_count(len));
        const auto d = symbols_to_frame_detailed(coded.body_symbols);
        CHECK(d.frame == f);
        CHECK(d.corrected_bytes == 0);
        CHECK(d.coded_bytes == coded_byte_count(serialized_size(len)));
    }
}

TEST_CASE("symbol counts of the reference frames")
{
    CHECK(frame_symbol_count(1000) == 17728);
    CHECK(frame_symbol_count(0) == 448);
    CHECK(frame_symbol_count(50) == 1248);
    // 17728 symbols at 20 us.
    CHECK(frame_symbol_count(1000) * 20 == 354560);
}

TEST_CASE("coded length law agrees with the block-walking oracle")
{
    const auto rows = golden::load("frame_lengths.txt");
    REQUIRE(rows.size() == 1501);
    for (const auto& row : rows) {
        const std::size_t p = std::stoul(row[0]);
        const std::size_t d = std::stoul(row[1]);
        const std::size_t c = std::stoul(row[2]);
        const std::size_t n = std::stoul(row[3]);
        CHECK(serialized_size(p) == d);
        CHECK(coded_byte_count(d) == c);
        CHECK(frame_symbol_count(p) == n);
        CHECK(serialized_size_for_coded(c) == d);
    }
    CHECK(serialized_size_for_coded(5) == 0);
}

TEST_CASE("fec output is block-wise systematic")
{
    const MacFrame f = make_frame(450, 9);
    const Bytes ser = frame_serialize(f);
    const Bytes coded = fec_encode(ser);
    REQUIRE(coded.size() == ser.size() + 3 * 16);
    CHECK(std::equal(ser.begin(), ser.begin() + 200, coded.begin()));
    CHECK(std::equal(ser.begin() + 200, ser.begin() + 400, coded.begin() + 216));
    CHECK(std::equal(ser.begin() + 400, ser.end(), coded.begin() + 432));
}

TEST_CASE("ack serialization")
{
    const MacFrame ack{0x0005, 0x0009, 0x0011, {}};
    const Bytes ser = frame_serialize(ack);
    REQUIRE(ser.size() == 10);
    CHECK(to_hex(Bytes(ser.begin(), ser.begin() + 8)) == "0000000500090011");
    const auto crc = crc16(std::span(ser).first(8));
    CHECK(ser[8] == (crc >> 8));
    CHECK(ser[9] == (crc & 0xFF));
    CHECK(frame_parse(ser) == ack);
    CHECK(frame_parse(ser).is_ack());
}

TEST_CASE("serialize rejects oversized payloads")
{
    CHECK(error_of([] { frame_serialize(make_frame(1501)); }) == Errc::PayloadTooLarge);
    CHECK(frame_serialize(make_frame(1500)).size() == 1510);
    CHECK(error_of([] { frame_serialize(make_frame(60), 50); }) == Errc::PayloadTooLarge);
}

TEST_CASE("parse detects bad checksums and bad lengths")
{
    Bytes ser = frame_serialize(make_frame(20));
    Bytes flipped = ser;
    flipped[12] ^= 0x01;
    CHECK(error_of([&] { frame_parse(flipped); }) == Errc::BadCrc);

    Bytes truncated(ser.begin(), ser.end() - 1);
    CHECK(error_of([&] { frame_parse(truncated); }) == Errc::BadLength);

    CHECK(error_of([] { frame_parse(Bytes(4, 0)); }) == Errc::BadLength);
}

TEST_CASE("symbol-level errors within the RS budget are repaired")
{
    const MacFrame f = make_frame(300, 4);
    auto coded = frame_to_symbols(f);
    // Damage three coded bytes in the first block by swapping a Manchester pair.
    for (std::size_t byte : {0u, 7u, 150u}) {
        std::swap(coded.body_symbols[byte * 16 + 2], coded.body_symbols[byte * 16 + 3]);
    }
    const auto d = symbols_to_frame_detailed(coded.body_symbols);
    CHECK(d.frame == f);
    CHECK(d.corrected_bytes == 3);
}

TEST_CASE("a dark body does not decode")
{
    const std::vector<Symbol> dark(frame_symbol_count(100) - 32, Symbol::Low);
    CHECK_THROWS_AS(symbols_to_frame(dark), Error);
}

TEST_CASE("too few body symbols")
{
    const auto coded = frame_to_symbols(make_frame(100));
    const std::span body(coded.body_symbols);
    CHECK(error_of([&] { symbols_to_frame(body.first(body.size() - 5)); }) == Errc::BadLength);
}

TEST_CASE("trailing symbols past the frame are ignored")
{
    const MacFrame f = make_frame(77);
    auto body = frame_to_symbols(f).body_symbols;
    body.insert(body.end(), 40, Symbol::Low);
    CHECK(symbols_to_frame(body) == f);
}

TEST_CASE("hex helpers")
{
    CHECK(to_hex(Bytes{0x00, 0xAB, 0x10}) == "00ab10");
    CHECK(from_hex("00AB10") == Bytes{0x00, 0xAB, 0x10});
    CHECK(error_of([] { from_hex("abc"); }) == Errc::ParseError);
    CHECK(error_of([] { from_hex("zz"); }) == Errc::ParseError);
}
