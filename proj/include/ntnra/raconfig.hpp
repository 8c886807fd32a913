#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ntnra/timing.hpp"

namespace ntnra::raconfig {

using timing::Duration;
using timing::TimeStamp;

enum class FrameRuleKind { Even, Any, List };

// A frame matches when frame mod period is one of the offsets.
struct FrameRule {
    FrameRuleKind kind = FrameRuleKind::Any;
    int period = 1;
    std::vector<int> offsets{0};

    static FrameRule even();
    static FrameRule any();
    // throws std::invalid_argument unless offsets are strictly increasing and inside [0, period)
    static FrameRule list(std::vector<int> offsets, int period);

    bool matches(std::int64_t frame) const;
    // frames move forward by delta (negative delta moves them back)
    FrameRule shifted(std::int64_t delta) const;
    bool operator==(const FrameRule&) const = default;
};

std::string to_string(const FrameRule& r);
FrameRule frame_rule_from_string(const std::string& s);

// One SF of the PRACH schedule together with the frames it is active in.
struct RaoSlot {
    int sf = 0;
    FrameRule frames;
    bool operator==(const RaoSlot&) const = default;
};

class PrachConfig {
public:
    PrachConfig(Standard standard, int index, std::vector<RaoSlot> slots, int preamble_format);
    PrachConfig(Standard standard, int index, std::vector<int> sf_numbers, FrameRule rule, int preamble_format);

    Standard standard() const { return standard_; }
    int index() const { return index_; }
    int preamble_format() const { return preamble_format_; }
    const std::vector<RaoSlot>& slots() const { return slots_; }
    std::vector<int> sf_numbers() const;
    // frame rule of the first slot; all slots share it unless the config was shifted across a frame boundary
    const FrameRule& frame_rule() const { return slots_.front().frames; }
    PrachConfig with_format(int preamble_format) const;

    bool operator==(const PrachConfig&) const = default;

private:
    Standard standard_;
    int index_;
    std::vector<RaoSlot> slots_;
    int preamble_format_;
};

// built-in indices 0..4; throws std::out_of_range otherwise
PrachConfig builtin_prach(Standard standard, int index);
// rows `standard,index,sf_list,frame_rule,format`; sf_list is ';'-separated,
// frame_rule is even | any | list:<o1;o2;...>:<period>. '#' starts a comment.
std::vector<PrachConfig> load_prach_table(const std::string& path);
std::vector<PrachConfig> parse_prach_table(const std::string& text);
const PrachConfig* find_prach(const std::vector<PrachConfig>& table, Standard standard, int index);

bool rao_matches(const PrachConfig& config, TimeStamp t);
// earliest RAO start at or after t
TimeStamp next_rao(const PrachConfig& config, TimeStamp t);

PrachConfig ue_shifted_rao(const PrachConfig& config, const timing::TimingAdvance& ta);
PrachConfig bs_delayed_rao(const PrachConfig& config, Duration cell_rtt);
PrachConfig bs_delayed_rao_seconds(const PrachConfig& config, double cell_rtt_s);

// CP length in ms per format 0..2
double cp_length_ms(Standard standard, int format);
Duration cp_length(Standard standard, int format);
inline constexpr int kPreambleFormatCount = 3;

enum class TimerUnit { Subframe, Slot, PdcchPeriod };

inline constexpr int kExtendedTimerValues = 16;
inline const Duration kExtendedTimerCeiling = Duration::ms(1000);
inline const Duration kDefaultPdcchPeriod = Duration::ms(10);

struct TimerSet {
    Standard standard = Standard::LTE;
    std::vector<int> rar_window_choices;
    TimerUnit rar_unit = TimerUnit::Subframe;
    std::vector<int> cr_timer_choices;
    TimerUnit cr_unit = TimerUnit::Subframe;
    Duration slot_duration = Duration::ms(1);
    Duration pdcch_period = kDefaultPdcchPeriod;
    bool extended = false;

    Duration unit_duration(TimerUnit u) const;
    // standard values, plus the NTN extension when `extended` is set; ascending
    std::vector<Duration> rar_grid() const;
    std::vector<Duration> cr_grid() const;
    Duration max_rar_window() const;
    Duration max_cr_timer() const;
};

// pdcch_period only matters for NB-IoT (1 ms .. 10.24 s)
TimerSet standard_timers(Standard standard, int mu = 0, Duration pdcch_period = kDefaultPdcchPeriod);
TimerSet extended_timers(TimerSet ts);
// extra grid points above the standard maximum
std::vector<Duration> extension_grid(Duration standard_max);

Duration max_rar_window(Standard standard, int mu = 0, Duration pdcch_period = kDefaultPdcchPeriod);

enum class TimerMode { UeAdapted, BsExtended };

std::string to_string(TimerMode m);
TimerMode timer_mode_from_string(const std::string& s);

struct EffectiveTimers {
    Duration rar_window;
    Duration cr_timer;
};

struct ReportedTimers {
    Duration rar_window;
    Duration cr_timer;
};

// the largest standard values
ReportedTimers default_reported(const TimerSet& ts);

// UeAdapted: reported + rtt. BsExtended: smallest grid value >= reported + rtt, the grid being the
// extended one. Throws std::domain_error when BsExtended runs off the grid.
EffectiveTimers effective_timers(const TimerSet& ts, TimerMode mode, Duration rtt, const ReportedTimers& reported);
EffectiveTimers effective_timers(const TimerSet& ts, TimerMode mode, Duration rtt);

struct Msg3Grant {
    int time_offset_sf = 4;
    int frequency_resource = 0;
    int mcs = 0;
    bool operator==(const Msg3Grant&) const = default;
};

// throws std::invalid_argument
void validate(const Msg3Grant& g, Standard standard);

}  // namespace ntnra::raconfig
