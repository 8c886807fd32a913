#include "ntnra/timing.hpp"

#include <cmath>
#include <stdexcept>

namespace ntnra {

std::string to_string(Standard s)
{
    switch (s) {
    case Standard::LTE: return "LTE";
    case Standard::NBIOT: return "NBIOT";
    case Standard::NR: return "NR";
    }
    return "?";
}

Standard standard_from_string(const std::string& s)
{
    if (s == "LTE" || s == "lte") return Standard::LTE;
    if (s == "NBIOT" || s == "nbiot" || s == "NB-IoT" || s == "nb-iot") return Standard::NBIOT;
    if (s == "NR" || s == "nr") return Standard::NR;
    throw std::invalid_argument("unknown standard '" + s + "'");
}

namespace timing {

Duration Duration::from_ms(double ms)
{
    return Duration(std::llround(ms * kSamplesPerMs));
}

Duration Duration::from_seconds(double s)
{
    return Duration(std::llround(s * kSampleRateHz));
}

TimeBase::TimeBase(Standard standard, int mu) : standard_(standard), mu_(standard == Standard::NR ? mu : 0)
{
    if (standard == Standard::NR && (mu < 0 || mu > 4))
        throw std::out_of_range("NR numerology must be in 0..4");
}

int TimeBase::slots_per_sf() const
{
    if (standard_ == Standard::NR) return 1 << mu_;
    return 2;
}

TimeStamp::TimeStamp(std::int64_t absolute_samples) : abs_(absolute_samples)
{
    if (absolute_samples < 0) throw std::underflow_error("timestamp before origin");
}

TimeStamp TimeStamp::at(std::int64_t frame, int sf, std::int64_t sample_in_sf)
{
    if (frame < 0 || sf < 0 || sf >= kSfPerFrame || sample_in_sf < 0 || sample_in_sf >= kSamplesPerSf)
        throw std::out_of_range("timestamp field out of radix");
    return TimeStamp(frame * kSamplesPerFrame + sf * kSamplesPerSf + sample_in_sf);
}

TimeStamp TimeStamp::at(std::int64_t frame, int sf, int slot, std::int64_t sample_in_slot, const TimeBase& tb)
{
    const std::int64_t slot_len = tb.slot_duration().count();
    if (slot < 0 || slot >= tb.slots_per_sf() || sample_in_slot < 0 || sample_in_slot >= slot_len)
        throw std::out_of_range("slot field out of radix");
    return at(frame, sf, slot * slot_len + sample_in_slot);
}

int TimeStamp::slot(const TimeBase& tb) const
{
    return static_cast<int>(sample_in_sf() / tb.slot_duration().count());
}

std::int64_t TimeStamp::sample_in_slot(const TimeBase& tb) const
{
    return sample_in_sf() % tb.slot_duration().count();
}

TimeStamp TimeStamp::sf_ceil() const
{
    const auto r = sample_in_sf();
    return r == 0 ? *this : TimeStamp(abs_ + kSamplesPerSf - r);
}

TimeStamp timestamp_add(TimeStamp t, Duration d)
{
    const auto v = t.samples() + d.count();
    if (v < 0) throw std::underflow_error("timestamp arithmetic went below origin");
    return TimeStamp(v);
}

TimeStamp timestamp_sub(TimeStamp t, Duration d)
{
    return timestamp_add(t, -d);
}

std::string to_string(const TimeStamp& t)
{
    return "(" + std::to_string(t.frame()) + "," + std::to_string(t.sf()) + "," + std::to_string(t.sample_in_sf()) + ")";
}

double sample_ta_seconds(int tac, int max_tac)
{
    return sample_ta(tac, max_tac).seconds();
}

Duration sample_ta(int tac, int max_tac)
{
    if (tac < 0 || tac > max_tac) throw std::out_of_range("TAC " + std::to_string(tac) + " outside [0, " + std::to_string(max_tac) + "]");
    return Duration(kTacStepSamples * tac);
}

DelayDecomposition decompose_delay(Duration rtt_est, int max_tac)
{
    if (rtt_est.count() < 0) throw std::invalid_argument("negative delay");
    if (max_tac < 0) throw std::invalid_argument("negative TAC limit");
    DelayDecomposition out;
    auto rem = rtt_est.count();
    out.ta.fa = rem / kSamplesPerFrame;
    rem -= out.ta.fa * kSamplesPerFrame;
    out.ta.sfa = static_cast<int>(rem / kSamplesPerSf);
    rem -= out.ta.sfa * kSamplesPerSf;
    const auto steps = rem / kTacStepSamples;
    out.ta.tac = static_cast<int>(steps < max_tac ? steps : max_tac);
    out.residual = Duration(rem - out.ta.tac * kTacStepSamples);
    return out;
}

DelayDecomposition decompose_delay_seconds(double rtt_est_s, int max_tac)
{
    if (rtt_est_s < 0) throw std::invalid_argument("negative delay");
    return decompose_delay(Duration::from_seconds(rtt_est_s), max_tac);
}

}  // namespace timing
}  // namespace ntnra
