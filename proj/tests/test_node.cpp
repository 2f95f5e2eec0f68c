#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "collision_oracle.hpp"

#include "openvlc/network.hpp"

using namespace openvlc;
using namespace openvlc::mac;
using channel::ChannelParams;

namespace {

constexpr ProtocolId kProto = 0x0011;
const Duration kTs = microseconds(20);

std::vector<NodeSetup> setups(std::size_t n, MacParams p = {})
{
    std::vector<NodeSetup> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(NodeSetup{static_cast<Address>(i + 1), p});
    }
    return out;
}

std::vector<TraceEvent> of_kind(const Network& net, const std::string& kind, std::int64_t node = -2)
{
    std::vector<TraceEvent> out;
    for (const auto& e : net.trace()) {
        if (e.kind == kind && (node == -2 || e.node == node)) {
            out.push_back(e);
        }
    }
    return out;
}

SimTime at_us(double us)
{
    return SimTime{0} + microseconds(us);
}

channel::SymbolRun run_of(std::vector<phy::Symbol> s)
{
    return std::make_shared<const std::vector<phy::Symbol>>(std::move(s));
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

TEST_CASE("one frame on an idle link: one DATA, one ACK, delivered")
{
    Network net(ChannelParams::uniform(2, 1.0, 0.1, 0.0), setups(2), 1);
    int delivered = 0;
    net.node(1).demux().register_handler(kProto, [&](const Datagram& d) {
        ++delivered;
        CHECK(d.payload.size() == 1000);
        CHECK(d.peer == 1);
    });
    int acked = 0;
    net.node(0).on_frame_acked = [&](const MacFrame&) { ++acked; };
    net.node(0).host_send(2, kProto, Bytes(1000, 0x33));
    net.run_until(at_us(1e6));

    CHECK(delivered == 1);
    CHECK(acked == 1);
    CHECK(of_kind(net, "tx_data").size() == 1);
    CHECK(of_kind(net, "tx_ack").size() == 1);
    CHECK(net.node(0).counters().frames_delivered == 1);
    CHECK(net.node(0).state().phase == MacPhase::Idle);

    // Clear after exactly 16 symbol periods, then the TX switch.
    const auto tx = of_kind(net, "tx_data").front();
    CHECK(tx.detail.at("start_us").get<double>() == doctest::Approx(16 * 20 + 2));
    // ACK: DATA airtime, then RX->TX switch at the receiver.
    const auto ack = of_kind(net, "tx_ack").front();
    CHECK(ack.detail.at("start_us").get<double>() == doctest::Approx(322 + 17728 * 20 + 2));
}

TEST_CASE("basic sense over a quiet channel and under a neighbour's frame")
{
    Network net(ChannelParams::uniform(2, 1.0, 0.1, 0.0), setups(2), 1);
    auto& ch = net.channel();
    sim::RngStream rng(1);
    CHECK(basic_sense(ch, 1, at_us(0), 16, 511.5, rng) == ChannelStatus::Clear);

    ch.set_mode(0, channel::LedMode::Tx, at_us(100));
    auto symbols = frame::frame_to_symbols(MacFrame{2, 1, kProto, Bytes(20, 0)}).concatenated();
    ch.emit_frame(0, at_us(102), run_of(symbols), false);
    CHECK(basic_sense(ch, 1, at_us(1000), 16, 511.5, rng) == ChannelStatus::Busy);

    // A single slot that lands on a LOW half sees nothing.
    std::size_t low = 40;
    while (symbols[low] != phy::Symbol::Low) {
        ++low;
    }
    CHECK(basic_sense(ch, 1, at_us(102 + 20.0 * static_cast<double>(low)), 1, 511.5, rng) ==
          ChannelStatus::Clear);

    CHECK(error_of([&] { basic_sense(ch, 0, at_us(1000), 16, 511.5, rng); }) == Errc::HalfDuplexViolation);
}

TEST_CASE("fast sense")
{
    Network net(ChannelParams::uniform(3, 1.0, 0.1, 0.0), setups(3), 1);
    auto& ch = net.channel();
    sim::RngStream rng(1);
    ch.set_mode(0, channel::LedMode::Tx, at_us(0));
    ch.emit_frame(0, at_us(20), run_of(std::vector<phy::Symbol>(10, phy::Symbol::High)), false);
    CHECK(fast_sense(ch, 1, at_us(50), 511.5, rng) == ChannelStatus::Busy);
    CHECK(fast_sense(ch, 1, at_us(500), 511.5, rng) == ChannelStatus::Clear);

    // Node 2 transmits with fast sensing: its LOW symbols are listening slots.
    ch.set_mode(2, channel::LedMode::Tx, at_us(0));
    ch.emit_frame(2, at_us(20), run_of({phy::Symbol::High, phy::Symbol::Low}), true);
    CHECK(fast_sense(ch, 2, at_us(50), 511.5, rng) == ChannelStatus::Busy);
    CHECK(error_of([&] { fast_sense(ch, 2, at_us(30), 511.5, rng); }) == Errc::HalfDuplexViolation);
    CHECK(error_of([&] { fast_sense(ch, 2, at_us(41), 511.5, rng); }) == Errc::HalfDuplexViolation);
}

TEST_CASE("sense threshold falls back to half scale, then tracks preambles")
{
    Network net(ChannelParams::uniform(2, 0.5, 0.1, 0.0), setups(2), 1);
    CHECK(net.node(1).sense_threshold() == doctest::Approx(511.5));
    net.node(1).demux().register_handler(kProto, [](const Datagram&) {});
    net.node(0).host_send(2, kProto, Bytes(10, 1));
    net.run_until(at_us(1e5));
    REQUIRE(net.node(1).last_threshold());
    // Preamble mean of 0.6 and 0.1 full scale.
    CHECK(net.node(1).sense_threshold() == doctest::Approx((614 + 102) / 2.0).epsilon(0.002));
}

TEST_CASE("a neighbour mid-frame defers the second sender")
{
    Network net(ChannelParams::uniform(2, 1.0, 0.1, 0.0), setups(2), 3);
    for (NodeId n : {0u, 1u}) {
        net.node(n).demux().register_handler(kProto, [](const Datagram&) {});
    }
    net.node(0).host_send(2, kProto, Bytes(1000, 1));
    net.scheduler().schedule(microseconds(50000), sim::kChannelTarget, sim::EventKind::TrafficArrival,
                             [&] { net.node(1).host_send(1, kProto, Bytes(100, 2)); });
    net.run_until(at_us(2e6));

    const auto a = of_kind(net, "tx_data", 0);
    const auto b = of_kind(net, "tx_data", 1);
    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    const double a_start = a.front().detail.at("start_us").get<double>();
    const double a_end = a_start + 17728 * 20;
    const double b_start = b.front().detail.at("start_us").get<double>();
    CHECK((b_start < a_start || b_start >= a_end));
    CHECK(of_kind(net, "collision").empty());
    CHECK(net.node(0).counters().frames_delivered == 1);
    CHECK(net.node(1).counters().frames_delivered == 1);
}

TEST_CASE("forced collision: both transmitters abort via fast sensing")
{
    std::mt19937_64 rng(21);
    for (double offset_us : {0.0, 5.0, 9.0, 11.0}) {
        CAPTURE(offset_us);
        MacParams pa;
        pa.proc_overhead_a = microseconds(1000);
        MacParams pb = pa;
        pb.proc_overhead_a = microseconds(1000 + offset_us);
        std::vector<NodeSetup> s{{1, pa}, {2, pb}, {3, pa}};
        Network net(ChannelParams::uniform(3, 1.0, 0.1, 0.0), s, 11);
        Bytes pay_a(500);
        Bytes pay_b(500);
        for (auto& x : pay_a) {
            x = static_cast<std::uint8_t>(rng());
        }
        for (auto& x : pay_b) {
            x = static_cast<std::uint8_t>(rng());
        }
        net.node(0).host_send(3, kProto, pay_a);
        net.node(1).host_send(3, kProto, pay_b);
        net.run_until(at_us(50000));

        const auto txa = of_kind(net, "tx_data", 0);
        const auto txb = of_kind(net, "tx_data", 1);
        REQUIRE(!txa.empty());
        REQUIRE(!txb.empty());
        const double sa = txa.front().detail.at("start_us").get<double>();
        const double sb = txb.front().detail.at("start_us").get<double>();
        CHECK(std::abs(sa - sb) < 20.0);

        const auto ca = of_kind(net, "collision", 0);
        const auto cb = of_kind(net, "collision", 1);
        REQUIRE(!ca.empty());
        REQUIRE(!cb.empty());
        const double abort_a = to_microseconds(ca.front().time - SimTime{0});
        const double abort_b = to_microseconds(cb.front().time - SimTime{0});

        const auto expected = collision_oracle::both(
            {sa, frame::frame_to_symbols(MacFrame{3, 1, kProto, pay_a}).concatenated()},
            {sb, frame::frame_to_symbols(MacFrame{3, 2, kProto, pay_b}).concatenated()},
            pa.collision_busy_symbols, 1, 20.0);
        REQUIRE(expected.a);
        REQUIRE(expected.b);
        CHECK(abort_a == doctest::Approx(*expected.a));
        CHECK(abort_b == doctest::Approx(*expected.b));

        // Once the offset passes half a symbol the alternating preambles
        // already look busy to each other.
        if (offset_us >= 10.0) {
            const double bound = std::max(sa, sb) + (2 * pa.collision_busy_symbols + 2) * 20.0;
            CHECK(abort_a <= bound);
            CHECK(abort_b <= bound);
        }
    }
}

TEST_CASE("collided frames are eventually delivered")
{
    MacParams pa;
    pa.proc_overhead_a = microseconds(1000);
    MacParams pb = pa;
    pb.proc_overhead_a = microseconds(1007);
    std::vector<NodeSetup> s{{1, pa}, {2, pb}, {3, pa}};
    Network net(ChannelParams::uniform(3, 1.0, 0.1, 0.0), s, 5);
    net.node(2).demux().register_handler(kProto, [](const Datagram&) {});
    net.node(0).host_send(3, kProto, Bytes(200, 0xA0));
    net.node(1).host_send(3, kProto, Bytes(200, 0x0B));
    net.run_until(at_us(5e6));
    CHECK(net.node(0).counters().frames_delivered + net.node(0).counters().frames_dropped == 1);
    CHECK(net.node(1).counters().frames_delivered + net.node(1).counters().frames_dropped == 1);
    CHECK(net.node(0).counters().frames_delivered + net.node(1).counters().frames_delivered >= 1);
}

TEST_CASE("jammed ACKs: dropped after exactly max_retx + 1 attempts")
{
    // The receiver hears the sender, but the sender never hears the ACKs.
    ChannelParams ch = ChannelParams::uniform(2, 1.0, 0.1, 0.0);
    ch.gain[1][0] = 0.0;
    MacParams p;
    Network net(ch, setups(2, p), 2);
    net.node(1).demux().register_handler(kProto, [](const Datagram&) {});
    int dropped = 0;
    net.node(0).on_frame_dropped = [&](const MacFrame&) { ++dropped; };
    net.node(0).host_send(2, kProto, Bytes(100, 7));
    net.run_until(at_us(10e6));

    const auto attempts = of_kind(net, "tx_data", 0);
    REQUIRE(attempts.size() == static_cast<std::size_t>(p.max_retx + 1));
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        CHECK(attempts[i].detail.at("attempt").get<int>() == static_cast<int>(i + 1));
    }
    CHECK(dropped == 1);
    CHECK(of_kind(net, "ack_timeout", 0).size() == attempts.size());
    CHECK(net.node(0).counters().drops == 1);
    CHECK(net.node(0).state().cw == p.cw_min);
    // Every decoded copy was acknowledged; the repeats count as duplicates.
    CHECK(net.node(1).counters().tx_ack == attempts.size());
    CHECK(net.node(1).counters().duplicates == attempts.size() - 1);
}

TEST_CASE("unregistered protocols are dropped and counted")
{
    Network net(ChannelParams::uniform(2, 1.0, 0.1, 0.0), setups(2), 1);
    net.node(0).host_send(2, 0xBEEF, Bytes(5, 1));
    net.run_until(at_us(1e5));
    CHECK(net.node(1).counters().rx_unknown_proto == 1);
    CHECK(net.node(0).counters().frames_delivered == 1);
}

TEST_CASE("queue full while the channel is jammed")
{
    // Node 2 is a jammer: a long HIGH run keeps node 0 in backoff.
    Network net(ChannelParams::uniform(3, 1.0, 0.1, 0.0), setups(3), 1);
    auto& ch = net.channel();
    ch.set_mode(2, channel::LedMode::Tx, at_us(0));
    net.start_emission(2, at_us(2), run_of(std::vector<phy::Symbol>(100000, phy::Symbol::High)), false);
    for (int i = 0; i < 64; ++i) {
        net.node(0).host_send(2, kProto, Bytes(10, 1));
    }
    net.run_until(at_us(50000));
    CHECK(net.node(0).state().phase == MacPhase::Backoff);
    CHECK(error_of([&] { net.node(0).host_send(2, kProto, Bytes(10, 1)); }) == Errc::QueueFull);
    CHECK(of_kind(net, "tx_data").empty());
}

TEST_CASE("conservation of submitted frames")
{
    Network net(ChannelParams::uniform(3, 1.0, 0.1, 0.05), setups(3), 9);
    for (NodeId n : {0u, 1u, 2u}) {
        net.node(n).demux().register_handler(kProto, [](const Datagram&) {});
    }
    for (int i = 0; i < 20; ++i) {
        net.node(0).host_send(3, kProto, Bytes(300, static_cast<std::uint8_t>(i)));
        net.node(1).host_send(3, kProto, Bytes(300, static_cast<std::uint8_t>(100 + i)));
    }
    for (int step = 1; step <= 20; ++step) {
        net.run_until(at_us(step * 100000.0));
        for (NodeId n : {0u, 1u}) {
            const auto& c = net.node(n).counters();
            CHECK(c.frames_submitted ==
                  c.frames_delivered + c.frames_dropped + net.node(n).state().frames_held());
        }
    }
}

TEST_CASE("half-duplex: a transmitting node never decodes its own frame")
{
    Network net(ChannelParams::uniform(2, 1.0, 0.1, 0.0), setups(2), 1);
    net.node(1).demux().register_handler(kProto, [](const Datagram&) {});
    net.node(0).host_send(2, kProto, Bytes(50, 1));
    net.run_until(at_us(1e5));
    for (const auto& e : of_kind(net, "rx", 0)) {
        CHECK(e.detail.at("ack").get<bool>());
    }
    CHECK(of_kind(net, "rx", 0).size() == 1);
}
