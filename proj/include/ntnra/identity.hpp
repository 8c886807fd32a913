#pragma once

#include <cstdint>
#include <variant>

#include "ntnra/timing.hpp"

namespace ntnra::identity {

struct RaRnti {
    int value = 1;
    Standard standard = Standard::LTE;
    bool operator==(const RaRnti&) const = default;
};

inline constexpr int kLteDefaultFidMax = 5;
inline constexpr int kNrMaxSid = 14;
inline constexpr int kNrMaxTid = 80;
inline constexpr int kNrMaxFid = 8;
inline constexpr int kNrMaxCid = 2;

// throws std::out_of_range on index violations
RaRnti ra_rnti_lte(int t_id, int f_id, int f_id_max = kLteDefaultFidMax);
RaRnti ra_rnti_nbiot(int t_id, int c_id);
RaRnti ra_rnti_nr(int s_id, int t_id, int f_id, int c_id);

struct NoCorrection {};
struct UeTaCorrection {
    int sfa = 0;
    std::int64_t fa = 0;
};
struct BsTdCorrection {
    int sfd = 0;
    std::int64_t fd = 0;
};
using TidCorrection = std::variant<NoCorrection, UeTaCorrection, BsTdCorrection>;

// t_id counts SFs (LTE, NB-IoT) or slots (NR); units_per_sf is 1 or the NR slots per SF.
// The frame parts drop out since t_id wraps every frame.
int corrected_t_id(int raw_t_id, const TidCorrection& correction, int units_per_sf = 1);

struct RntiIndices {
    int f_id = 0;
    int c_id = 0;
    int s_id = 0;
};

// NR slots counted at numerology min(mu, 3), which keeps t_id below 80
int nr_tid_slots_per_sf(int mu);
// t_id of the RAO starting at t as seen on the sender's own clock
int raw_t_id(Standard standard, int mu, timing::TimeStamp rao_start);
RaRnti ra_rnti_for(Standard standard, int t_id, const RntiIndices& idx);

}  // namespace ntnra::identity
