#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <map>

#include "openvlc/sim_kernel.hpp"

using namespace openvlc;
using namespace openvlc::sim;

TEST_CASE("same-time events run in schedule order")
{
    Scheduler s;
    std::vector<int> order;
    for (int i = 0; i < 5; ++i) {
        s.schedule(microseconds(10), 0, EventKind::Timer, [&order, i] { order.push_back(i); });
    }
    s.run_until(SimTime{0} + microseconds(10));
    CHECK(order == std::vector{0, 1, 2, 3, 4});
}

TEST_CASE("zero delay fires before later events")
{
    Scheduler s;
    std::vector<int> order;
    s.schedule(microseconds(1), 0, EventKind::Timer, [&] { order.push_back(2); });
    s.schedule(Duration::zero(), 0, EventKind::Timer, [&] { order.push_back(1); });
    s.run_until(SimTime{0} + microseconds(5));
    CHECK(order == std::vector{1, 2});
}

TEST_CASE("cancelled events never fire")
{
    Scheduler s;
    int fired = 0;
    const auto h = s.schedule(microseconds(3), 0, EventKind::AckTimeout, [&] { ++fired; });
    s.schedule(microseconds(4), 0, EventKind::Timer, [&] { ++fired; });
    CHECK(s.cancel(h));
    CHECK_FALSE(s.cancel(h));
    CHECK(s.pending() == 1);
    CHECK(s.run_until(SimTime{0} + microseconds(10)) == 1);
    CHECK(fired == 1);
}

TEST_CASE("empty run advances the clock")
{
    Scheduler s;
    CHECK(s.run_until(SimTime{0} + microseconds(42)) == 0);
    CHECK(s.now() == SimTime{0} + microseconds(42));
}

TEST_CASE("clock is monotonic and events see their own time")
{
    Scheduler s;
    std::vector<SimTime> times;
    std::function<void()> tick = [&] {
        times.push_back(s.now());
        if (times.size() < 50) {
            s.schedule(microseconds(static_cast<double>(times.size() % 7)), 0, EventKind::Timer, tick);
        }
    };
    s.schedule(Duration::zero(), 0, EventKind::Timer, tick);
    s.run_until(SimTime{0} + seconds(1));
    CHECK(times.size() == 50);
    CHECK(std::is_sorted(times.begin(), times.end()));
}

TEST_CASE("split runs equal one run")
{
    auto build = [](Scheduler& s, std::vector<std::pair<SimTime, int>>& log) {
        for (int i = 0; i < 40; ++i) {
            s.schedule(microseconds(3.0 * (i % 11)), i % 3, EventKind::Timer,
                       [&s, &log, i] { log.emplace_back(s.now(), i); });
        }
    };
    Scheduler a;
    Scheduler b;
    std::vector<std::pair<SimTime, int>> la;
    std::vector<std::pair<SimTime, int>> lb;
    build(a, la);
    build(b, lb);
    a.run_until(SimTime{0} + microseconds(100));
    b.run_until(SimTime{0} + microseconds(12));
    b.run_until(SimTime{0} + microseconds(13));
    b.run_until(SimTime{0} + microseconds(100));
    CHECK(la == lb);
}

TEST_CASE("dispatch log is reproducible")
{
    auto run = [] {
        Scheduler s;
        s.record_dispatches(true);
        RngStream rng(77);
        std::function<void()> step = [&] {
            if (s.dispatch_log().size() < 200) {
                s.schedule(microseconds(static_cast<double>(rng.uniform_int(0, 20))),
                           rng.uniform_int(0, 3), EventKind::Timer, step);
            }
        };
        s.schedule(Duration::zero(), 0, EventKind::Timer, step);
        s.run_until(SimTime{0} + seconds(1));
        return s.dispatch_log();
    };
    CHECK(run() == run());
}

TEST_CASE("rng streams are reproducible and isolated")
{
    RngStream a(5, 1, RngPurpose::Backoff);
    RngStream b(5, 1, RngPurpose::Backoff);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    CHECK(derive_seed(5, 1, RngPurpose::Backoff) != derive_seed(5, 1, RngPurpose::Noise));
    CHECK(derive_seed(5, 1, RngPurpose::Backoff) != derive_seed(5, 2, RngPurpose::Backoff));
    CHECK(derive_seed(5, 1, RngPurpose::Backoff) != derive_seed(6, 1, RngPurpose::Backoff));

    // Draining one node's noise stream leaves another node's backoff alone.
    RngStream backoff_ref(9, 0, RngPurpose::Backoff);
    RngStream backoff(9, 0, RngPurpose::Backoff);
    RngStream noise(9, 1, RngPurpose::Noise);
    for (int i = 0; i < 1000; ++i) {
        noise.normal(0, 1);
    }
    for (int i = 0; i < 100; ++i) {
        CHECK(backoff.uniform_int(1, 63) == backoff_ref.uniform_int(1, 63));
    }
}

TEST_CASE("uniform_int covers the range evenly")
{
    RngStream r(123);
    std::map<std::int64_t, int> hist;
    constexpr int kDraws = 60000;
    for (int i = 0; i < kDraws; ++i) {
        ++hist[r.uniform_int(1, 6)];
    }
    REQUIRE(hist.size() == 6);
    CHECK(hist.begin()->first == 1);
    CHECK(hist.rbegin()->first == 6);
    double chi2 = 0.0;
    for (const auto& [v, n] : hist) {
        const double e = kDraws / 6.0;
        chi2 += (n - e) * (n - e) / e;
    }
    // 5 degrees of freedom, p = 0.001.
    CHECK(chi2 < 20.5);
}

TEST_CASE("normal draws have the requested moments")
{
    RngStream r(8);
    double sum = 0.0;
    double sq = 0.0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) {
        const double x = r.normal(2.0, 0.5);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / kDraws;
    const double var = sq / kDraws - mean * mean;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
    CHECK(std::sqrt(var) == doctest::Approx(0.5).epsilon(0.02));
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
}
