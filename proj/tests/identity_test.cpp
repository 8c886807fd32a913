#include <doctest.h>

#include <set>
#include <stdexcept>

#include "ntnra/identity.hpp"
#include "oracles.hpp"

using namespace ntnra;
using namespace ntnra::identity;

TEST_CASE("RA-RNTI hand values")
{
    CHECK(ra_rnti_lte(0, 0).value == 1);
    CHECK(ra_rnti_lte(1, 0).value == 2);
    CHECK(ra_rnti_lte(5, 2).value == 26);
    CHECK(ra_rnti_nbiot(0, 0).value == 1);
    CHECK(ra_rnti_nbiot(4, 0).value == 2);
    CHECK(ra_rnti_nbiot(7, 1).value == 258);
    CHECK(ra_rnti_nr(0, 1, 0, 0).value == 15);
    CHECK(ra_rnti_nr(0, 0, 0, 1).value == 8961);
    CHECK_THROWS_AS(ra_rnti_lte(10, 0), std::out_of_range);
    CHECK_THROWS_AS(ra_rnti_lte(0, -1), std::out_of_range);
    CHECK_THROWS_AS(ra_rnti_nr(14, 0, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(ra_rnti_nr(0, 80, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(ra_rnti_nbiot(-1, 0), std::out_of_range);
}

TEST_CASE("RA-RNTI brute force and injectivity")
{
    std::set<int> seen;
    for (int f = 0; f <= kLteDefaultFidMax; ++f)
        for (int t = 0; t < 10; ++t) {
            const auto r = ra_rnti_lte(t, f);
            CHECK(r.value == oracle::rnti_lte(t, f));
            CHECK(r.value <= 1 + 9 + 10 * kLteDefaultFidMax);
            CHECK(seen.insert(r.value).second);
        }
    seen.clear();
    for (int s = 0; s < 14; ++s)
        for (int t = 0; t < 80; ++t)
            for (int f = 0; f < 8; ++f)
                for (int c = 0; c < 2; ++c) {
                    const auto r = ra_rnti_nr(s, t, f, c);
                    CHECK(r.value == oracle::rnti_nr(s, t, f, c));
                    CHECK(seen.insert(r.value).second);
                }
    CHECK(seen.size() == 14u * 80 * 8 * 2);
    for (int t = 0; t < 40; ++t)
        for (int c = 0; c < 4; ++c) CHECK(ra_rnti_nbiot(t, c).value == oracle::rnti_nbiot(t, c));
}

TEST_CASE("t_id corrections")
{
    CHECK(corrected_t_id(7, UeTaCorrection{4, 0}) == 1);
    CHECK(corrected_t_id(3, NoCorrection{}) == 3);
    CHECK(corrected_t_id(5, BsTdCorrection{4, 0}) == 1);
    CHECK(corrected_t_id(1, BsTdCorrection{4, 0}) == 7);
    CHECK(corrected_t_id(15, UeTaCorrection{2, 3}, 8) == (15 + 16) % 80);
}

TEST_CASE("both ends agree under matched corrections")
{
    using timing::Duration;
    using timing::TimeStamp;
    for (std::int64_t rtt_sf = 0; rtt_sf < 500; rtt_sf += 7) {
        const int sfa = static_cast<int>(rtt_sf % 10);
        const std::int64_t fa = rtt_sf / 10;
        for (int sf = 0; sf < 10; ++sf) {
            const auto nominal = TimeStamp::at(100, sf);
            const auto ue_tx = nominal - Duration::sf(rtt_sf);
            const auto bs_rx = nominal + Duration::sf(rtt_sf);
            const int ue = corrected_t_id(raw_t_id(Standard::LTE, 0, ue_tx), UeTaCorrection{sfa, fa});
            const int bs = raw_t_id(Standard::LTE, 0, nominal);
            CHECK(ue == bs);
            const int bs_td = corrected_t_id(raw_t_id(Standard::LTE, 0, bs_rx), BsTdCorrection{sfa, fa});
            CHECK(bs_td == raw_t_id(Standard::LTE, 0, nominal));
            if (sfa != 0) {
                CHECK(raw_t_id(Standard::LTE, 0, ue_tx) != bs);
                CHECK(raw_t_id(Standard::LTE, 0, bs_rx) != bs);
            }
        }
    }
}

TEST_CASE("NR t_id counts slots")
{
    using timing::TimeStamp;
    const timing::TimeBase tb(Standard::NR, 1);
    CHECK(nr_tid_slots_per_sf(0) == 1);
    CHECK(nr_tid_slots_per_sf(3) == 8);
    CHECK(nr_tid_slots_per_sf(4) == 8);
    CHECK(raw_t_id(Standard::NR, 1, TimeStamp::at(5, 3, 1, 0, tb)) == 7);
    CHECK(raw_t_id(Standard::LTE, 0, TimeStamp::at(5, 3)) == 3);
    CHECK(ra_rnti_for(Standard::NR, 7, {}).value == oracle::rnti_nr(0, 7, 0, 0));
    CHECK(ra_rnti_for(Standard::NBIOT, 7, {0, 1, 0}).value == oracle::rnti_nbiot(7, 1));
}
