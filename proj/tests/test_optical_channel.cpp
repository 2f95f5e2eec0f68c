#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "openvlc/optical_channel.hpp"

using namespace openvlc;
using namespace openvlc::channel;
using phy::Symbol;

namespace {

const Duration kTs = microseconds(20);

SimTime at_us(double us)
{
    return SimTime{0} + microseconds(us);
}

ChannelParams noiseless(std::size_t nodes, double gain, double ambient)
{
    return ChannelParams::uniform(nodes, gain, ambient, 0.0);
}

SymbolRun run_of(std::vector<Symbol> s)
{
    return std::make_shared<const std::vector<Symbol>>(std::move(s));
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

TEST_CASE("mode switches take effect after the latency")
{
    OpticalChannel ch(noiseless(2, 1.0, 0.1), kTs);
    sim::RngStream rng(1);
    CHECK(ch.set_mode(0, LedMode::Tx, at_us(100)) == at_us(102));
    CHECK(ch.state_at(0, at_us(101)) == LedState::Switching);
    CHECK(error_of([&] { ch.sample(0, at_us(101), rng); }) == Errc::NotInRxMode);
    CHECK(ch.state_at(0, at_us(102)) == LedState::Tx);
    CHECK(error_of([&] { ch.sample(0, at_us(103), rng); }) == Errc::NotInRxMode);
}

TEST_CASE("TX to RX to TX inside one symbol")
{
    OpticalChannel ch(noiseless(2, 1.0, 0.1), kTs);
    ch.set_mode(0, LedMode::Tx, at_us(0));
    const SimTime rx = ch.set_mode(0, LedMode::Rx, at_us(20));
    CHECK(rx == at_us(22));
    const SimTime tx = ch.set_mode(0, LedMode::Tx, rx);
    CHECK(tx == at_us(24));
    CHECK(tx - at_us(20) < kTs);
    CHECK(ch.state_at(0, at_us(23)) == LedState::Switching);
    CHECK(ch.state_at(0, at_us(24)) == LedState::Tx);
}

TEST_CASE("unknown node")
{
    OpticalChannel ch(noiseless(2, 1.0, 0.1), kTs);
    CHECK(error_of([&] { ch.set_mode(5, LedMode::Tx, at_us(0)); }) == Errc::UnknownNode);
}

TEST_CASE("emit requires TX mode for the whole symbol")
{
    OpticalChannel ch(noiseless(2, 1.0, 0.1), kTs);
    CHECK(error_of([&] { ch.emit(0, Symbol::High, at_us(0), kTs); }) == Errc::NotInTxMode);
    ch.set_mode(0, LedMode::Tx, at_us(0));
    CHECK(error_of([&] { ch.emit(0, Symbol::High, at_us(1), kTs); }) == Errc::NotInTxMode);
    ch.emit(0, Symbol::High, at_us(2), kTs);
    CHECK(ch.intensity(0, at_us(2)) == 1.0);
    CHECK(ch.intensity(0, at_us(21.999)) == 1.0);
    CHECK(ch.intensity(0, at_us(22)) == 0.0);
    ch.emit(0, Symbol::Low, at_us(22), kTs);
    CHECK(ch.intensity(0, at_us(30)) == 0.0);
}

TEST_CASE("sample formula and quantization")
{
    sim::RngStream rng(1);
    {
        OpticalChannel ch(noiseless(2, 1.0, 0.1), kTs);
        ch.set_mode(0, LedMode::Tx, at_us(0));
        ch.emit(0, Symbol::High, at_us(20), kTs);
        ch.emit(0, Symbol::Low, at_us(40), kTs);
        CHECK(ch.sample(1, at_us(30), rng).counts == 1023);
        CHECK(ch.sample(1, at_us(50), rng).counts == 102);
    }
    {
        OpticalChannel ch(noiseless(3, 0.4, 0.0), kTs);
        ch.set_mode(0, LedMode::Tx, at_us(0));
        ch.set_mode(1, LedMode::Tx, at_us(0));
        ch.emit(0, Symbol::High, at_us(20), kTs);
        ch.emit(1, Symbol::High, at_us(20), kTs);
        CHECK(ch.sample(2, at_us(30), rng).counts == 818);
    }
}

TEST_CASE("clamping never exceeds the ADC range")
{
    sim::RngStream rng(4);
    OpticalChannel ch(ChannelParams::uniform(4, 2.5, 0.9, 0.3), kTs);
    for (NodeId n = 0; n < 3; ++n) {
        ch.set_mode(n, LedMode::Tx, at_us(0));
        ch.emit_frame(n, at_us(10), run_of(std::vector<Symbol>(50, Symbol::High)), false);
    }
    for (int i = 0; i < 500; ++i) {
        const auto s = ch.sample(3, at_us(10 + i), rng);
        CHECK(s.counts <= 1023);
    }
    OpticalChannel dark(ChannelParams::uniform(2, 1.0, 0.0, 0.3), kTs);
    for (int i = 0; i < 500; ++i) {
        CHECK(dark.sample(1, at_us(i), rng).counts <= 1023);
    }
}

TEST_CASE("superposition does not depend on emitter order")
{
    ChannelParams p = noiseless(4, 0.0, 0.05);
    p.gain[0][3] = 0.2;
    p.gain[1][3] = 0.3;
    p.gain[2][3] = 0.15;
    sim::RngStream rng(1);
    const std::vector<std::vector<NodeId>> orders{{0, 1, 2}, {2, 1, 0}, {1, 2, 0}};
    std::vector<std::vector<std::uint16_t>> seen;
    for (const auto& order : orders) {
        OpticalChannel ch(p, kTs);
        for (NodeId n : order) {
            ch.set_mode(n, LedMode::Tx, at_us(0));
            std::vector<Symbol> s;
            for (int k = 0; k < 20; ++k) {
                s.push_back(((k + static_cast<int>(n)) % 3 == 0) ? Symbol::High : Symbol::Low);
            }
            ch.emit_frame(n, at_us(20), run_of(s), false);
        }
        std::vector<std::uint16_t> counts;
        for (int k = 0; k < 20; ++k) {
            counts.push_back(ch.sample(3, at_us(30 + 20 * k), rng).counts);
        }
        seen.push_back(counts);
    }
    CHECK(seen[0] == seen[1]);
    CHECK(seen[0] == seen[2]);
}

TEST_CASE("fast-sense frames open an RX window inside LOW symbols only")
{
    OpticalChannel ch(noiseless(2, 1.0, 0.1), kTs);
    sim::RngStream rng(1);
    ch.set_mode(0, LedMode::Tx, at_us(0));
    ch.emit_frame(0, at_us(20), run_of({Symbol::High, Symbol::Low, Symbol::High}), true);
    CHECK(ch.state_at(0, at_us(30)) == LedState::Tx);
    CHECK(error_of([&] { ch.sample(0, at_us(30), rng); }) == Errc::NotInRxMode);
    CHECK(ch.state_at(0, at_us(41)) == LedState::Switching);
    CHECK(ch.state_at(0, at_us(42)) == LedState::Rx);
    CHECK(ch.sample(0, at_us(50), rng).counts == 102);
    CHECK(ch.state_at(0, at_us(58)) == LedState::Switching);
    CHECK(ch.state_at(0, at_us(60)) == LedState::Tx);
}

TEST_CASE("a node never hears itself")
{
    ChannelParams p = noiseless(2, 1.0, 0.1);
    p.gain[0][0] = 5.0;
    OpticalChannel ch(p, kTs);
    ch.set_mode(1, LedMode::Tx, at_us(0));
    ch.emit_frame(1, at_us(10), run_of(std::vector<Symbol>(4, Symbol::Low)), false);
    CHECK(ch.received_intensity(0, at_us(15)) == doctest::Approx(0.1));
}

TEST_CASE("noiseless samples are deterministic")
{
    OpticalChannel ch(noiseless(2, 0.7, 0.1), kTs);
    sim::RngStream a(1);
    sim::RngStream b(999);
    ch.set_mode(0, LedMode::Tx, at_us(0));
    ch.emit_frame(0, at_us(10), run_of({Symbol::High, Symbol::Low, Symbol::High}), false);
    for (int t = 0; t < 80; ++t) {
        CHECK(ch.sample(1, at_us(t), a) == ch.sample(1, at_us(t), b));
    }
}

TEST_CASE("truncation ends an emission early")
{
    OpticalChannel ch(noiseless(2, 1.0, 0.1), kTs);
    ch.set_mode(0, LedMode::Tx, at_us(0));
    const auto id = ch.emit_frame(0, at_us(20), run_of(std::vector<Symbol>(10, Symbol::High)), false);
    ch.truncate(0, id, at_us(80));
    CHECK(ch.find_emission(0, id)->end == at_us(80));
    CHECK(ch.intensity(0, at_us(79)) == 1.0);
    CHECK(ch.intensity(0, at_us(80)) == 0.0);
}

TEST_CASE("link gain")
{
    CHECK(link_gain(0.6, 0.36) == doctest::Approx(1.0));
    CHECK(link_gain(1.0, 0.36) == doctest::Approx(0.36));
    CHECK(link_gain(1.2, 0.36) == doctest::Approx(link_gain(0.6, 0.36) / 4.0));
    CHECK(error_of([] { link_gain(0.0, 0.36); }) == Errc::NonPositiveDistance);
    CHECK(error_of([] { link_gain(-1.0, 0.36); }) == Errc::NonPositiveDistance);
}

TEST_CASE("channel parameter validation")
{
    ChannelParams p = noiseless(2, 1.0, 0.1);
    p.switch_latency = microseconds(10);
    CHECK(error_of([&] { p.validate(kTs); }) == Errc::ValidationError);
    p = noiseless(2, 1.0, 0.1);
    p.gain[0][1] = -0.1;
    CHECK(error_of([&] { p.validate(kTs); }) == Errc::ValidationError);
}
