#include <doctest.h>

#include <cmath>

#include "ntnra/engine.hpp"

using namespace ntnra;
using namespace ntnra::engine;
using protocol::CorrectionStrategy;

namespace {

Scenario at_rtt(double ms, CorrectionStrategy s)
{
    Scenario sc;
    sc.rtt = Duration::from_ms(ms);
    sc.strategy = s;
    return sc;
}

double access_ms(const KpiReport& r)
{
    REQUIRE(r.ues.size() == 1);
    REQUIRE(r.ues[0].access_time);
    return r.ues[0].access_time->millis();
}

}  // namespace

TEST_CASE("terrestrial baseline")
{
    for (const auto& s : {CorrectionStrategy::none(), CorrectionStrategy::ta(), CorrectionStrategy::td(), CorrectionStrategy::sample_ta()}) {
        const auto r = run(at_rtt(0, s));
        CHECK(access_ms(r) == doctest::Approx(12.0));
        CHECK(r.ues[0].retries == 0);
        CHECK(r.ues[0].furthest_stage == Stage::Connected);
    }
}

TEST_CASE("uncorrected LEO never gets its preamble detected")
{
    auto sc = at_rtt(4, CorrectionStrategy::none());
    sc.max_sim_time = Duration::ms(1000);
    const auto r = run(sc);
    CHECK_FALSE(r.all_connected());
    CHECK_FALSE(r.ues[0].access_time);
    CHECK(r.ues[0].furthest_stage == Stage::Msg1Undetected);
    CHECK(r.end_time <= TimeStamp(0) + sc.max_sim_time);
    for (const auto& t : r.trace) CHECK(t.time <= TimeStamp(0) + sc.max_sim_time);
}

TEST_CASE("sample-level TA alone cannot bridge a LEO delay")
{
    auto sc = at_rtt(4, CorrectionStrategy::sample_ta());
    sc.max_sim_time = Duration::ms(1000);
    const auto r = run(sc);
    CHECK_FALSE(r.all_connected());
    CHECK(r.ues[0].furthest_stage == Stage::Msg1Undetected);
}

TEST_CASE("TD delays detection to the shifted RAO")
{
    auto sc = at_rtt(4, CorrectionStrategy::td());
    const auto r = run(sc);
    CHECK(r.all_connected());
    bool detected = false;
    for (const auto& t : r.trace)
        if (t.side == "BS" && t.event.rfind("rx Msg1", 0) == 0) {
            CHECK(t.time.sf() == 5);
            detected = t.detail.find("RAO") != std::string::npos;
        }
    CHECK(detected);
}

TEST_CASE("corrected strategies connect across the RTT range")
{
    for (double ms : {4.3, 25.0, 120.0, 477.57, 480.0, 540.0}) {
        CAPTURE(ms);
        const double ta = access_ms(run(at_rtt(ms, CorrectionStrategy::ta())));
        CHECK(std::abs(ta - (12 + 2 * ms)) <= 1.0);
        auto td_sc = at_rtt(ms, CorrectionStrategy::td());
        td_sc.preamble_format = 1;
        if (std::fmod(ms, 1.0) > 0.68) continue;
        const double td = access_ms(run(td_sc));
        CHECK(td >= ta - 1e-9);
    }
}

TEST_CASE("TD curve is flat between extended-grid steps")
{
    const auto pts = sweep_rtt(Scenario{}, {Duration::ms(25), Duration::ms(50)}, {CorrectionStrategy::td()});
    REQUIRE(pts.size() == 2);
    REQUIRE(pts[0].access_time);
    REQUIRE(pts[1].access_time);
    CHECK(*pts[0].access_time == *pts[1].access_time);
}

TEST_CASE("ladder")
{
    const std::vector<Stage> expected{Stage::Msg1Undetected, Stage::Msg2Withdrawn, Stage::Msg3SchedMiss,
                                      Stage::Msg3DecodeFail, Stage::Connected};
    CHECK(ladder_flags().size() == 5);
    CHECK(ladder_flags().front() == protocol::FixFlags{});
    CHECK(ladder_flags().back() == protocol::FixFlags::all());
    for (double ms : {4.0, 4.3, 477.57, 484.0}) {
        for (const auto& s : {CorrectionStrategy::ta(), CorrectionStrategy::td()}) {
            CAPTURE(ms);
            auto sc = at_rtt(ms, s);
            sc.preamble_format = 1;  // TD needs the sub-SF remainder inside the CP
            const auto steps = run_ladder(sc);
            REQUIRE(steps.size() == 5);
            for (std::size_t i = 0; i < 5; ++i) CHECK(steps[i].stage == expected[i]);
            CHECK(strictly_progresses(steps));
        }
    }
    // GEO cell centre, transparent payload
    const auto geo = run_ladder(at_rtt(477.57, CorrectionStrategy::ta()));
    CHECK(strictly_progresses(geo));
    const auto zero = run_ladder(at_rtt(0, CorrectionStrategy::td()));
    for (const auto& s : zero) CHECK(s.stage == Stage::Connected);
}

TEST_CASE("marker folding")
{
    using protocol::Marker;
    CHECK(fold_markers({}) == Stage::Msg1Undetected);
    CHECK(fold_markers({Marker::Msg1Sent}) == Stage::Msg1Undetected);
    CHECK(fold_markers({Marker::Msg1Sent, Marker::Msg1Detected}) == Stage::Msg2Timeout);
    CHECK(fold_markers({Marker::Msg1Detected, Marker::RarWithdrawn}) == Stage::Msg2Withdrawn);
    CHECK(fold_markers({Marker::Msg1Detected, Marker::RarAccepted, Marker::Msg3SchedMiss}) == Stage::Msg3SchedMiss);
    CHECK(fold_markers({Marker::RarAccepted, Marker::Msg3DecodeFail}) == Stage::Msg3DecodeFail);
    CHECK(fold_markers({Marker::Msg3Decoded, Marker::ContentionLost}) == Stage::Msg4Failed);
    CHECK(fold_markers({Marker::Connected}) == Stage::Connected);
}

TEST_CASE("determinism")
{
    auto sc = at_rtt(4.3, CorrectionStrategy::ta());
    sc.n_ues = 3;
    sc.seed = 17;
    const auto a = run(sc);
    const auto b = run(sc);
    CHECK(kpi_csv(a) == kpi_csv(b));
    CHECK(trace_csv(a) == trace_csv(b));
    CHECK(a.events == b.events);
    sc.seed = 18;
    CHECK(trace_csv(run(sc)) != trace_csv(a));
}

TEST_CASE("trace is in time order")
{
    auto sc = at_rtt(120, CorrectionStrategy::td());
    sc.n_ues = 4;
    const auto r = run(sc);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i - 1].time <= r.trace[i].time);
}

TEST_CASE("collisions")
{
    Scenario sc;
    sc.n_ues = 2;
    sc.forced_preamble = 7;
    const auto r = multi_ue_run(sc);
    CHECK(r.all_connected());
    CHECK(r.collision_count >= 1);
    for (const auto& u : r.ues) {
        CHECK(u.retries >= 1);
        CHECK(u.collisions >= 1);
    }

    SUBCASE("resolution at Msg3 leaves one winner per round")
    {
        sc.collision = protocol::CollisionModel::ResolveAtMsg3;
        const auto m = multi_ue_run(sc);
        CHECK(m.all_connected());
        int first_try = 0;
        for (const auto& u : m.ues) first_try += u.retries == 0;
        CHECK(first_try == 1);
    }
    SUBCASE("distinct preambles do not collide")
    {
        sc.forced_preamble.reset();
        sc.contention_free = true;
        const auto m = multi_ue_run(sc);
        CHECK(m.all_connected());
        for (const auto& u : m.ues) CHECK(u.retries == 0);
    }
    CHECK_THROWS(multi_ue_run(Scenario{}));
}

TEST_CASE("single-UE access is a lower bound")
{
    const double single = access_ms(run(Scenario{}));
    for (int n : {2, 5, 10}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            Scenario sc;
            sc.n_ues = n;
            sc.seed = seed;
            const auto r = multi_ue_run(sc);
            for (const auto& u : r.ues)
                if (u.access_time) CHECK(u.access_time->millis() >= single - 1e-9);
        }
    }
}

TEST_CASE("mean access time grows with load")
{
    double prev = 0;
    for (int n : {1, 2, 4, 8}) {
        double sum = 0;
        int count = 0;
        for (std::uint64_t seed = 1; seed <= 300; ++seed) {
            Scenario sc;
            sc.n_ues = n;
            sc.seed = seed;
            sc.preamble_format = 0;
            sc.record_trace = false;
            const auto r = run(sc);
            if (auto m = r.mean_access_ms()) {
                sum += *m;
                ++count;
            }
        }
        REQUIRE(count > 0);
        const double mean = sum / count;
        CAPTURE(n);
        CHECK(mean >= prev - 1e-9);
        prev = mean;
    }
}

TEST_CASE("CSV output")
{
    const auto r = run(Scenario{});
    CHECK(kpi_csv_header() == "rtt_ms,strategy,access_time_ms,retries,furthest_stage\n");
    CHECK(kpi_csv(r) == "rtt_ms,strategy,access_time_ms,retries,furthest_stage\n0.000000,TA,12.000000,0,Connected\n");
    auto sc = at_rtt(4, CorrectionStrategy::none());
    sc.max_sim_time = Duration::ms(300);
    CHECK(kpi_csv(run(sc)).find(",NA,") != std::string::npos);
    CHECK(format_ms(Duration::from_ms(1.5)) == "1.500000");
}

TEST_CASE("scenario validation")
{
    Scenario sc;
    sc.n_ues = 0;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
    sc = Scenario{};
    sc.rtt = Duration::ms(700);
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
    sc = Scenario{};
    sc.msg3_offset_sf = 3;
    CHECK_THROWS(sc.validate());
}
