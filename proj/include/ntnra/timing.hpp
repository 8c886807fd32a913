#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace ntnra {

enum class Standard { LTE, NBIOT, NR };

std::string to_string(Standard s);
Standard standard_from_string(const std::string& s);

namespace timing {

// 1/Ts with Ts = 1/(2048*15000) s
inline constexpr std::int64_t kSampleRateHz = 30'720'000;
inline constexpr std::int64_t kSamplesPerMs = 30'720;
inline constexpr std::int64_t kSamplesPerSf = kSamplesPerMs;
inline constexpr std::int64_t kSfPerFrame = 10;
inline constexpr std::int64_t kSamplesPerFrame = kSamplesPerSf * kSfPerFrame;
inline constexpr std::int64_t kTacStepSamples = 16;
inline constexpr int kDefaultMaxTac = 1282;

// Signed span of samples. Negative values are legal for durations, never for timestamps.
class Duration {
public:
    constexpr Duration() = default;
    constexpr explicit Duration(std::int64_t samples) : samples_(samples) {}

    static constexpr Duration samples(std::int64_t n) { return Duration(n); }
    static constexpr Duration ms(std::int64_t n) { return Duration(n * kSamplesPerMs); }
    static constexpr Duration sf(std::int64_t n) { return Duration(n * kSamplesPerSf); }
    static constexpr Duration frames(std::int64_t n) { return Duration(n * kSamplesPerFrame); }
    // rounds to the nearest sample
    static Duration from_ms(double ms);
    static Duration from_seconds(double s);

    constexpr std::int64_t count() const { return samples_; }
    double seconds() const { return static_cast<double>(samples_) / kSampleRateHz; }
    double millis() const { return static_cast<double>(samples_) / kSamplesPerMs; }
    // floor to whole subframes
    constexpr std::int64_t whole_sf() const
    {
        return samples_ >= 0 ? samples_ / kSamplesPerSf : -((-samples_ + kSamplesPerSf - 1) / kSamplesPerSf);
    }

    constexpr Duration operator+(Duration o) const { return Duration(samples_ + o.samples_); }
    constexpr Duration operator-(Duration o) const { return Duration(samples_ - o.samples_); }
    constexpr Duration operator-() const { return Duration(-samples_); }
    constexpr Duration operator*(std::int64_t k) const { return Duration(samples_ * k); }
    constexpr Duration& operator+=(Duration o) { samples_ += o.samples_; return *this; }
    constexpr Duration& operator-=(Duration o) { samples_ -= o.samples_; return *this; }
    constexpr auto operator<=>(const Duration&) const = default;

private:
    std::int64_t samples_ = 0;
};

class TimeBase {
public:
    explicit TimeBase(Standard standard, int mu = 0);

    Standard standard() const { return standard_; }
    int mu() const { return mu_; }
    double sample_duration_s() const { return 1.0 / kSampleRateHz; }
    Duration sf_duration() const { return Duration::sf(1); }
    int frame_sf_count() const { return static_cast<int>(kSfPerFrame); }
    // NR: 1/2^mu ms; LTE and NB-IoT: 0.5 ms
    Duration slot_duration() const { return Duration(kSamplesPerSf / slots_per_sf()); }
    int slots_per_sf() const;

private:
    Standard standard_;
    int mu_;
};

// Absolute point on the sample grid, counted from (frame 0, sf 0, sample 0).
class TimeStamp {
public:
    constexpr TimeStamp() = default;
    // throws std::underflow_error when negative
    explicit TimeStamp(std::int64_t absolute_samples);
    static TimeStamp at(std::int64_t frame, int sf, std::int64_t sample_in_sf = 0);
    static TimeStamp at(std::int64_t frame, int sf, int slot, std::int64_t sample_in_slot, const TimeBase& tb);

    constexpr std::int64_t samples() const { return abs_; }
    constexpr std::int64_t frame() const { return abs_ / kSamplesPerFrame; }
    constexpr int sf() const { return static_cast<int>((abs_ / kSamplesPerSf) % kSfPerFrame); }
    // subframes since the origin
    constexpr std::int64_t sf_count() const { return abs_ / kSamplesPerSf; }
    constexpr std::int64_t sample_in_sf() const { return abs_ % kSamplesPerSf; }
    int slot(const TimeBase& tb) const;
    std::int64_t sample_in_slot(const TimeBase& tb) const;
    // start of the containing subframe
    TimeStamp sf_floor() const { return TimeStamp(abs_ - sample_in_sf()); }
    // start of the first subframe at or after this instant
    TimeStamp sf_ceil() const;
    double millis() const { return static_cast<double>(abs_) / kSamplesPerMs; }

    constexpr auto operator<=>(const TimeStamp&) const = default;

private:
    std::int64_t abs_ = 0;
};

TimeStamp timestamp_add(TimeStamp t, Duration d);
TimeStamp timestamp_sub(TimeStamp t, Duration d);
inline TimeStamp operator+(TimeStamp t, Duration d) { return timestamp_add(t, d); }
inline TimeStamp operator-(TimeStamp t, Duration d) { return timestamp_sub(t, d); }
inline Duration operator-(TimeStamp a, TimeStamp b) { return Duration(a.samples() - b.samples()); }

std::string to_string(const TimeStamp& t);

struct TimingAdvance {
    std::int64_t fa = 0;
    int sfa = 0;
    int tac = 0;

    Duration sf_part() const { return Duration::frames(fa) + Duration::sf(sfa); }
    Duration sample_part() const { return Duration(kTacStepSamples * tac); }
    Duration total() const { return sf_part() + sample_part(); }
    bool operator==(const TimingAdvance&) const = default;
};

struct DelayDecomposition {
    TimingAdvance ta;
    Duration residual;  // left over after fa, sfa and the largest admissible tac
};

// 16*Ts*tac; throws std::out_of_range outside [0, max_tac]
double sample_ta_seconds(int tac, int max_tac = kDefaultMaxTac);
Duration sample_ta(int tac, int max_tac = kDefaultMaxTac);

// throws std::invalid_argument for negative delays
DelayDecomposition decompose_delay(Duration rtt_est, int max_tac = kDefaultMaxTac);
DelayDecomposition decompose_delay_seconds(double rtt_est_s, int max_tac = kDefaultMaxTac);

}  // namespace timing
}  // namespace ntnra
