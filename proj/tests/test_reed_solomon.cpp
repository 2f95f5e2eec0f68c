#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "golden.hpp"
#include "openvlc/frame_codec.hpp"
#include "openvlc/reed_solomon.hpp"

using namespace openvlc;
using openvlc::frame::crc16;
using openvlc::frame::from_hex;
using openvlc::frame::to_hex;

namespace {

Bytes random_bytes(std::mt19937_64& rng, std::size_t n)
{
    Bytes b(n);
    for (auto& x : b) {
        x = static_cast<std::uint8_t>(rng());
    }
    return b;
}

// Flips `count` distinct positions to a different value.
void corrupt(Bytes& block, std::size_t count, std::mt19937_64& rng)
{
    std::set<std::size_t> positions;
    while (positions.size() < count) {
        positions.insert(static_cast<std::size_t>(rng() % block.size()));
    }
    for (auto p : positions) {
        block[p] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    }
}

}  // namespace

TEST_CASE("crc16 matches the bitwise oracle")
{
    const auto rows = golden::load("crc16_ccitt_false.txt");
    REQUIRE(rows.size() >= 5);
    for (const auto& row : rows) {
        CAPTURE(row[0]);
        const Bytes data = from_hex(row[0]);
        CHECK(to_hex(Bytes{static_cast<std::uint8_t>(crc16(data) >> 8), static_cast<std::uint8_t>(crc16(data))}) ==
              row[1]);
    }
    const std::string check = "123456789";
    CHECK(crc16(Bytes(check.begin(), check.end())) == 0x29B1);
}

TEST_CASE("crc16 residue is zero when the checksum is appended")
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        Bytes data = random_bytes(rng, 1 + rng() % 300);
        const auto c = crc16(data);
        data.push_back(static_cast<std::uint8_t>(c >> 8));
        data.push_back(static_cast<std::uint8_t>(c));
        CHECK(crc16(data) == 0);
    }
}

TEST_CASE("crc16 detects every single-bit and single-byte error")
{
    std::mt19937_64 rng(11);
    const Bytes data = random_bytes(rng, 64);
    const auto ref = crc16(data);
    for (std::size_t bit = 0; bit < data.size() * 8; ++bit) {
        Bytes d = data;
        d[bit / 8] ^= static_cast<std::uint8_t>(0x80 >> (bit % 8));
        CHECK(crc16(d) != ref);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (int delta = 1; delta < 256; delta += 17) {
            Bytes d = data;
            d[i] ^= static_cast<std::uint8_t>(delta);
            CHECK(crc16(d) != ref);
        }
    }
}

TEST_CASE("rs parity matches the long-division oracle")
{
    const auto rows = golden::load("rs_216_200.txt");
    REQUIRE(rows.size() >= 5);
    for (const auto& row : rows) {
        const Bytes data = from_hex(row[0]);
        const Bytes coded = fec::rs_encode_block(data);
        REQUIRE(coded.size() == data.size() + 16);
        CHECK(Bytes(coded.begin(), coded.begin() + static_cast<std::ptrdiff_t>(data.size())) == data);
        CHECK(to_hex(Bytes(coded.end() - 16, coded.end())) == row[1]);
        const auto decoded = fec::rs_decode_block(coded);
        CHECK(decoded.data == data);
        CHECK(decoded.corrected == 0);
    }
}

TEST_CASE("rs block size limits")
{
    CHECK_THROWS_AS(fec::rs_encode_block(Bytes{}), Error);
    CHECK_THROWS_AS(fec::rs_encode_block(Bytes(201, 0)), Error);
    CHECK(fec::rs_encode_block(Bytes(200, 1)).size() == 216);
}

TEST_CASE("rs corrects up to eight byte errors anywhere in a full block")
{
    std::mt19937_64 rng(2024);
    int corrected = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Bytes data = random_bytes(rng, 200);
        Bytes coded = fec::rs_encode_block(data);
        const std::size_t errors = 1 + static_cast<std::size_t>(trial % 8);
        corrupt(coded, errors, rng);
        const auto d = fec::rs_decode_block(coded);
        if (d.data == data && d.corrected == errors) {
            ++corrected;
        }
    }
    CHECK(corrected == 1000);
}

TEST_CASE("rs corrects errors in shortened blocks, parity included")
{
    std::mt19937_64 rng(5);
    for (std::size_t len : {1u, 10u, 37u, 199u}) {
        for (int trial = 0; trial < 50; ++trial) {
            const Bytes data = random_bytes(rng, len);
            Bytes coded = fec::rs_encode_block(data);
            corrupt(coded, std::min<std::size_t>(8, coded.size()), rng);
            CHECK(fec::rs_decode_block(coded).data == data);
        }
    }
}

TEST_CASE("nine errors are never silently accepted as the original")
{
    std::mt19937_64 rng(99);
    int flagged = 0;
    int miscorrected = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Bytes data = random_bytes(rng, 200);
        Bytes coded = fec::rs_encode_block(data);
        corrupt(coded, 9, rng);
        try {
            const auto d = fec::rs_decode_block(coded);
            CHECK(d.data != data);
            ++miscorrected;
        } catch (const Error& e) {
            CHECK(e.code() == Errc::Uncorrectable);
            ++flagged;
        }
    }
    // Beyond the design distance most patterns are detected; the rest decode
    // to a different codeword, which the frame CRC is there to catch.
    CHECK(flagged > 250);
    MESSAGE("9-error patterns: ", flagged, " flagged, ", miscorrected, " miscorrected");
}
