#include "ntnra/identity.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ntnra::identity {

RaRnti ra_rnti_lte(int t_id, int f_id, int f_id_max)
{
    if (t_id < 0 || t_id > 9) throw std::out_of_range("LTE t_id must be 0..9, got " + std::to_string(t_id));
    if (f_id < 0 || f_id > f_id_max) throw std::out_of_range("LTE f_id out of range");
    return {1 + t_id + 10 * f_id, Standard::LTE};
}

RaRnti ra_rnti_nbiot(int t_id, int c_id)
{
    if (t_id < 0 || c_id < 0) throw std::out_of_range("NB-IoT indices must be non-negative");
    return {1 + t_id / 4 + 256 * c_id, Standard::NBIOT};
}

RaRnti ra_rnti_nr(int s_id, int t_id, int f_id, int c_id)
{
    if (s_id < 0 || s_id >= kNrMaxSid) throw std::out_of_range("NR s_id must be 0..13");
    if (t_id < 0 || t_id >= kNrMaxTid) throw std::out_of_range("NR t_id must be 0..79");
    if (f_id < 0 || f_id >= kNrMaxFid) throw std::out_of_range("NR f_id must be 0..7");
    if (c_id < 0 || c_id >= kNrMaxCid) throw std::out_of_range("NR c_id must be 0 or 1");
    return {1 + s_id + 14 * t_id + 14 * 80 * f_id + 14 * 80 * 8 * c_id, Standard::NR};
}

int corrected_t_id(int raw, const TidCorrection& correction, int units_per_sf)
{
    const int period = 10 * units_per_sf;
    int shift = 0;
    if (const auto* ue = std::get_if<UeTaCorrection>(&correction)) shift = ue->sfa * units_per_sf;
    if (const auto* bs = std::get_if<BsTdCorrection>(&correction)) shift = -bs->sfd * units_per_sf;
    return ((raw + shift) % period + period) % period;
}

int nr_tid_slots_per_sf(int mu)
{
    return 1 << std::min(mu, 3);
}

int raw_t_id(Standard standard, int mu, timing::TimeStamp rao_start)
{
    if (standard != Standard::NR) return rao_start.sf();
    const int per_sf = nr_tid_slots_per_sf(mu);
    const auto slot_len = timing::kSamplesPerSf / per_sf;
    return rao_start.sf() * per_sf + static_cast<int>(rao_start.sample_in_sf() / slot_len);
}

RaRnti ra_rnti_for(Standard standard, int t_id, const RntiIndices& idx)
{
    switch (standard) {
    case Standard::LTE: return ra_rnti_lte(t_id, idx.f_id);
    case Standard::NBIOT: return ra_rnti_nbiot(t_id, idx.c_id);
    case Standard::NR: return ra_rnti_nr(idx.s_id, t_id, idx.f_id, idx.c_id);
    }
    throw std::logic_error("unreachable");
}

}  // namespace ntnra::identity
