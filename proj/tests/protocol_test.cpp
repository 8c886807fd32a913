#include <doctest.h>

#include <optional>

#include "ntnra/protocol.hpp"

using namespace ntnra;
using namespace ntnra::protocol;
using timing::Duration;
using timing::TimeStamp;

namespace {

std::optional<SetTimer> timer_of(const StepResult& r, int kind)
{
    for (const auto& a : r.actions)
        if (const auto* t = std::get_if<SetTimer>(&a); t && t->timer.kind == kind) return *t;
    return std::nullopt;
}

template <typename M>
std::optional<M> sent(const StepResult& r)
{
    for (const auto& a : r.actions)
        if (const auto* t = std::get_if<Transmit>(&a))
            if (const auto* m = std::get_if<M>(&t->msg.body)) return *m;
    return std::nullopt;
}

UeMachine terrestrial_ue(std::optional<int> forced = 5)
{
    UeConfig cfg;
    cfg.forced_preamble = forced;
    StrategyInputs in;
    return UeMachine(cfg, apply_strategy_ue(CorrectionStrategy::none(), in));
}

}  // namespace

TEST_CASE("UE accepts a matching RAR and withdraws a foreign one")
{
    auto ue = terrestrial_ue();
    const auto r0 = ue.step(TimeStamp::at(0, 0), Trigger{});
    CHECK(ue.state() == UeState::GenerateMsg1);
    const auto tick = timer_of(r0, UeMachine::RaoTick);
    REQUIRE(tick);
    CHECK(tick->at == TimeStamp::at(0, 1));
    const auto r1 = ue.step(tick->at, tick->timer);
    CHECK(ue.state() == UeState::WaitMsg2);
    REQUIRE(sent<Msg1>(r1));
    CHECK(sent<Msg1>(r1)->preamble_index == 5);
    REQUIRE(ue.ra_rnti());
    CHECK(ue.ra_rnti()->value == 2);
    const auto window = timer_of(r1, UeMachine::RarWindowEnd);
    REQUIRE(window);

    SUBCASE("foreign RNTI")
    {
        Msg2 m2;
        m2.ra_rnti = identity::ra_rnti_lte(5, 0);
        m2.preamble_index = 5;
        const auto r2 = ue.step(TimeStamp::at(0, 5), Delivered{RaMessage{m2, {}}});
        CHECK(ue.state() == UeState::WaitMsg2);
        const auto r3 = ue.step(window->at, window->timer);
        CHECK(ue.state() == UeState::GenerateMsg1);
        CHECK(ue.retry_count() == 1);
        CHECK(ue.power_ramp_level() == 1);
        REQUIRE(ue.backoff_deadline());
        CHECK(*ue.backoff_deadline() >= window->at);
        CHECK(*ue.backoff_deadline() <= window->at + Duration::ms(20));
        CHECK(timer_of(r3, UeMachine::RaoTick));
        (void)r2;
    }
    SUBCASE("matching RNTI")
    {
        Msg2 m2;
        m2.ra_rnti = *ue.ra_rnti();
        m2.preamble_index = 5;
        m2.temp_c_rnti = 0x123;
        const auto r2 = ue.step(TimeStamp::at(0, 5), Delivered{RaMessage{m2, {}}});
        CHECK(ue.state() == UeState::GenerateMsg3);
        CHECK(ue.temp_c_rnti() == 0x123);
        const auto tx = timer_of(r2, UeMachine::Msg3Tx);
        REQUIRE(tx);
        CHECK(tx->at == TimeStamp::at(0, 9));
        // the grant offset is never undercut
        CHECK(tx->at - TimeStamp::at(0, 5) >= Duration::sf(4));
        const auto r3 = ue.step(tx->at, tx->timer);
        CHECK(ue.state() == UeState::WaitMsg4);
        REQUIRE(sent<Msg3>(r3));
        const auto msg3 = *sent<Msg3>(r3);

        Msg4 good = BsMachine::contention_resolution(msg3);
        CHECK(good.echoed_c_rnti == msg3.c_rnti);
        SUBCASE("own identity echoed")
        {
            ue.step(TimeStamp::at(1, 3), Delivered{RaMessage{good, {}}});
            CHECK(ue.state() == UeState::Connected);
        }
        SUBCASE("someone else won")
        {
            Msg4 other = good;
            other.echoed_c_rnti ^= 1;
            ue.step(TimeStamp::at(1, 3), Delivered{RaMessage{other, {}}});
            CHECK(ue.state() == UeState::WaitMsg4);
            const auto cr = timer_of(r3, UeMachine::CrWindowEnd);
            REQUIRE(cr);
            ue.step(cr->at, cr->timer);
            CHECK(ue.state() == UeState::GenerateMsg1);
            CHECK(ue.retry_count() == 1);
        }
    }
}

TEST_CASE("RAR outside the window is ignored")
{
    auto ue = terrestrial_ue();
    const auto tick = timer_of(ue.step(TimeStamp::at(0, 0), Trigger{}), UeMachine::RaoTick);
    ue.step(tick->at, tick->timer);
    Msg2 m2;
    m2.ra_rnti = *ue.ra_rnti();
    m2.preamble_index = 5;
    ue.step(TimeStamp::at(0, 2), Delivered{RaMessage{m2, {}}});
    CHECK(ue.state() == UeState::WaitMsg2);
}

TEST_CASE("stale timers are ignored")
{
    auto ue = terrestrial_ue();
    const auto tick = timer_of(ue.step(TimeStamp::at(0, 0), Trigger{}), UeMachine::RaoTick);
    auto stale = tick->timer;
    stale.token += 7;
    const auto r = ue.step(tick->at, stale);
    CHECK(r.ignored);
    CHECK(ue.state() == UeState::GenerateMsg1);
    CHECK_THROWS_AS(ue.step(TimeStamp::at(0, 0), Trigger{}), std::logic_error);
}

TEST_CASE("strategy wiring")
{
    StrategyInputs in;
    in.ue_rtt_estimate = Duration::from_ms(4.3);
    in.cell_rtt = Duration::from_ms(4.3);

    SUBCASE("TA")
    {
        const auto h = apply_strategy_ue(CorrectionStrategy::ta(), in);
        CHECK(h.tx_prach.sf_numbers() == std::vector<int>{7});
        CHECK(h.anchor_shift == Duration::sf(4));
        CHECK(h.msg1_advance == Duration(16 * 576));
        CHECK(h.seq_sf_shift == 4);
        const auto b = apply_strategy_bs(CorrectionStrategy::ta(), in);
        CHECK(b.monitored == in.prach);
        CHECK(b.sched_shift == Duration::sf(4));
    }
    SUBCASE("TD")
    {
        const auto b = apply_strategy_bs(CorrectionStrategy::td(), in);
        CHECK(b.monitored.sf_numbers() == std::vector<int>{5});
        CHECK(b.rao_delay == Duration::sf(4));
        CHECK(b.seq_sf_shift == -4);
        const auto h = apply_strategy_ue(CorrectionStrategy::td(), in);
        CHECK(h.tx_prach == in.prach);
        CHECK(h.msg1_advance == Duration{0});
    }
    SUBCASE("TD needs the cell RTT")
    {
        in.cell_rtt.reset();
        CHECK_THROWS_AS(apply_strategy_bs(CorrectionStrategy::td(), in), std::invalid_argument);
        CHECK_THROWS_AS(apply_strategy_ue(CorrectionStrategy::td(), in), std::invalid_argument);
    }
    SUBCASE("sample-level TA saturates")
    {
        const auto h = apply_strategy_ue(CorrectionStrategy::sample_ta(), in);
        CHECK(h.msg1_advance == Duration(16 * timing::kDefaultMaxTac));
        REQUIRE(h.total_ta_cap);
    }
    SUBCASE("zero delay makes every strategy a no-op")
    {
        in.ue_rtt_estimate = Duration{0};
        in.cell_rtt = Duration{0};
        for (const auto& s : {CorrectionStrategy::ta(), CorrectionStrategy::td(), CorrectionStrategy::sample_ta()}) {
            const auto h = apply_strategy_ue(s, in);
            CHECK(h.tx_prach == in.prach);
            CHECK(h.msg1_advance == Duration{0});
            CHECK(h.anchor_shift == Duration{0});
            const auto b = apply_strategy_bs(s, in);
            CHECK(b.monitored == in.prach);
            CHECK(b.sched_shift == Duration{0});
            CHECK(b.rar_hold == Duration{0});
        }
    }
}

TEST_CASE("labels and flags")
{
    CHECK(strategy_label(CorrectionStrategy::ta()) == "TA");
    CHECK(strategy_label(CorrectionStrategy::td()) == "TD");
    CHECK(strategy_from_label("TD").mode == CorrectionMode::SfLevelTD);
    CHECK(fix_flags_from_string("rao,rnti") == FixFlags{true, true, false, false});
    CHECK(fix_flags_from_string("rao+seq") == FixFlags{true, false, false, true});
    CHECK(fix_flags_from_string("all") == FixFlags::all());
    CHECK(fix_flags_from_string("none") == FixFlags{});
    CHECK_THROWS(fix_flags_from_string("rao,bogus"));
    CHECK(to_string(Stage::Msg3DecodeFail) == "Msg3-decode-fail");
    CHECK(Stage::Msg1Undetected < Stage::Msg2Withdrawn);
    CHECK(Stage::Msg3DecodeFail < Stage::Connected);
    CHECK(mode_from_string(to_string(CorrectionMode::SfLevelTA)) == CorrectionMode::SfLevelTA);
    CHECK(collision_model_from_string(to_string(CollisionModel::ResolveAtMsg3)) == CollisionModel::ResolveAtMsg3);
}

TEST_CASE("BS ignores preambles outside its RAOs")
{
    BsConfig cfg;
    StrategyInputs in;
    BsMachine bs(cfg, apply_strategy_bs(CorrectionStrategy::none(), in));
    const auto r = bs.step(TimeStamp::at(0, 5), Delivered{RaMessage{Msg1{3, TimeStamp::at(0, 1)}, {{0, 0}}}});
    CHECK(bs.idle());
    CHECK(r.detail.find("lost") != std::string::npos);
    const auto r2 = bs.step(TimeStamp::at(1, 1), Delivered{RaMessage{Msg1{3, TimeStamp::at(1, 1)}, {{0, 1}}}});
    CHECK_FALSE(bs.idle());
    (void)r2;
}
