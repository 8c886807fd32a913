#include "ntnra/raconfig.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ntnra::raconfig {

namespace {

std::int64_t floor_mod(std::int64_t a, std::int64_t m)
{
    const auto r = a % m;
    return r < 0 ? r + m : r;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

int parse_int(const std::string& s, const char* what)
{
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("bad ") + what + " '" + s + "'");
    }
    if (used != s.size()) throw std::invalid_argument(std::string("bad ") + what + " '" + s + "'");
    return v;
}

}  // namespace

FrameRule FrameRule::even()
{
    return FrameRule{FrameRuleKind::Even, 2, {0}};
}

FrameRule FrameRule::any()
{
    return FrameRule{FrameRuleKind::Any, 1, {0}};
}

FrameRule FrameRule::list(std::vector<int> offsets, int period)
{
    if (period < 1) throw std::invalid_argument("frame period must be positive");
    if (offsets.empty()) throw std::invalid_argument("frame list is empty");
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (offsets[i] < 0 || offsets[i] >= period) throw std::invalid_argument("frame offset outside period");
        if (i > 0 && offsets[i] <= offsets[i - 1]) throw std::invalid_argument("frame list must be strictly increasing");
    }
    return FrameRule{FrameRuleKind::List, period, std::move(offsets)};
}

bool FrameRule::matches(std::int64_t frame) const
{
    const auto r = static_cast<int>(floor_mod(frame, period));
    return std::find(offsets.begin(), offsets.end(), r) != offsets.end();
}

FrameRule FrameRule::shifted(std::int64_t delta) const
{
    if (kind == FrameRuleKind::Any) return *this;
    std::vector<int> out;
    out.reserve(offsets.size());
    for (int o : offsets) out.push_back(static_cast<int>(floor_mod(o + delta, period)));
    std::sort(out.begin(), out.end());
    if (kind == FrameRuleKind::Even && out == std::vector<int>{0}) return even();
    return FrameRule{FrameRuleKind::List, period, std::move(out)};
}

std::string to_string(const FrameRule& r)
{
    switch (r.kind) {
    case FrameRuleKind::Even: return "even";
    case FrameRuleKind::Any: return "any";
    case FrameRuleKind::List: break;
    }
    std::string s = "list:";
    for (std::size_t i = 0; i < r.offsets.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(r.offsets[i]);
    }
    return s + ":" + std::to_string(r.period);
}

FrameRule frame_rule_from_string(const std::string& raw)
{
    const auto s = trim(raw);
    if (s == "even" || s == "Even") return FrameRule::even();
    if (s == "any" || s == "Any") return FrameRule::any();
    if (s.rfind("list:", 0) == 0) {
        const auto parts = split(s.substr(5), ':');
        if (parts.size() != 2) throw std::invalid_argument("frame list needs offsets and period: '" + s + "'");
        std::vector<int> offs;
        for (const auto& o : split(parts[0], ';')) offs.push_back(parse_int(o, "frame offset"));
        return FrameRule::list(std::move(offs), parse_int(parts[1], "frame period"));
    }
    throw std::invalid_argument("unknown frame rule '" + s + "'");
}

PrachConfig::PrachConfig(Standard standard, int index, std::vector<RaoSlot> slots, int preamble_format)
    : standard_(standard), index_(index), slots_(std::move(slots)), preamble_format_(preamble_format)
{
    if (slots_.empty()) throw std::invalid_argument("PRACH config without subframes");
    if (preamble_format < 0 || preamble_format >= kPreambleFormatCount)
        throw std::invalid_argument("preamble format must be 0..2");
    std::sort(slots_.begin(), slots_.end(), [](const RaoSlot& a, const RaoSlot& b) { return a.sf < b.sf; });
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (slots_[i].sf < 0 || slots_[i].sf > 9) throw std::invalid_argument("subframe number outside 0..9");
        if (i > 0 && slots_[i].sf == slots_[i - 1].sf) throw std::invalid_argument("duplicate subframe number");
    }
}

PrachConfig::PrachConfig(Standard standard, int index, std::vector<int> sf_numbers, FrameRule rule, int preamble_format)
    : PrachConfig(standard, index,
                  [&] {
                      std::vector<RaoSlot> s;
                      for (int sf : sf_numbers) s.push_back({sf, rule});
                      return s;
                  }(),
                  preamble_format)
{
}

std::vector<int> PrachConfig::sf_numbers() const
{
    std::vector<int> out;
    for (const auto& s : slots_) out.push_back(s.sf);
    return out;
}

PrachConfig PrachConfig::with_format(int preamble_format) const
{
    return PrachConfig(standard_, index_, slots_, preamble_format);
}

PrachConfig builtin_prach(Standard standard, int index)
{
    if (index < 0 || index > 4) throw std::out_of_range("built-in PRACH indices are 0..4; load others from a table file");
    if (standard == Standard::NR) {
        static const int nr_sf[5] = {1, 4, 7, 9, 1};
        const auto rule = index == 4 ? FrameRule::list({1}, 8) : FrameRule::list({1}, 16);
        return PrachConfig(standard, index, std::vector<int>{nr_sf[index]}, rule, 0);
    }
    // NB-IoT has no index table of its own; it reuses the LTE rows
    static const int lte_sf[5] = {1, 4, 7, 1, 4};
    const auto rule = index < 3 ? FrameRule::even() : FrameRule::any();
    return PrachConfig(standard, index, std::vector<int>{lte_sf[index]}, rule, 0);
}

std::vector<PrachConfig> parse_prach_table(const std::string& text)
{
    std::vector<PrachConfig> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            const auto f = split(line, ',');
            if (f.size() != 5) throw std::invalid_argument("expected 5 fields, got " + std::to_string(f.size()));
            if (f[0] == "standard") continue;  // header row
            std::vector<int> sfs;
            for (const auto& s : split(f[2], ';')) sfs.push_back(parse_int(s, "subframe"));
            out.emplace_back(standard_from_string(f[0]), parse_int(f[1], "index"), sfs, frame_rule_from_string(f[3]),
                             parse_int(f[4], "format"));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("PRACH table line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<PrachConfig> load_prach_table(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open PRACH table '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_prach_table(ss.str());
}

const PrachConfig* find_prach(const std::vector<PrachConfig>& table, Standard standard, int index)
{
    for (const auto& c : table)
        if (c.standard() == standard && c.index() == index) return &c;
    return nullptr;
}

bool rao_matches(const PrachConfig& config, TimeStamp t)
{
    for (const auto& s : config.slots())
        if (s.sf == t.sf() && s.frames.matches(t.frame())) return true;
    return false;
}

TimeStamp next_rao(const PrachConfig& config, TimeStamp t)
{
    std::int64_t period = 1;
    for (const auto& s : config.slots()) period = std::lcm(period, static_cast<std::int64_t>(s.frames.period));
    auto cur = t.sf_ceil();
    const auto limit = cur.sf_count() + period * timing::kSfPerFrame;
    while (cur.sf_count() <= limit) {
        if (rao_matches(config, cur)) return cur;
        cur = cur + Duration::sf(1);
    }
    throw std::logic_error("PRACH config has no occasion");
}

namespace {

// moves every occasion by a whole number of subframes
PrachConfig shift_config(const PrachConfig& config, std::int64_t delta_sf)
{
    std::vector<RaoSlot> out;
    for (const auto& s : config.slots()) {
        const auto total = s.sf + delta_sf;
        const auto frame_delta = total >= 0 ? total / 10 : -((-total + 9) / 10);
        out.push_back({static_cast<int>(total - frame_delta * 10), s.frames.shifted(frame_delta)});
    }
    return PrachConfig(config.standard(), config.index(), std::move(out), config.preamble_format());
}

}  // namespace

PrachConfig ue_shifted_rao(const PrachConfig& config, const timing::TimingAdvance& ta)
{
    return shift_config(config, -(ta.fa * timing::kSfPerFrame + ta.sfa));
}

PrachConfig bs_delayed_rao(const PrachConfig& config, Duration cell_rtt)
{
    if (cell_rtt.count() < 0) throw std::invalid_argument("negative cell RTT");
    return shift_config(config, cell_rtt.whole_sf());
}

PrachConfig bs_delayed_rao_seconds(const PrachConfig& config, double cell_rtt_s)
{
    return bs_delayed_rao(config, Duration::from_seconds(cell_rtt_s));
}

double cp_length_ms(Standard standard, int format)
{
    static const double nbiot[3] = {0.027, 0.067, 0.8};
    static const double lte[3] = {0.1, 0.68, 0.2};
    static const double nr[3] = {0.1, 0.68, 0.15};
    if (format < 0 || format >= kPreambleFormatCount) throw std::out_of_range("preamble format must be 0..2");
    switch (standard) {
    case Standard::NBIOT: return nbiot[format];
    case Standard::LTE: return lte[format];
    case Standard::NR: return nr[format];
    }
    return 0.0;
}

Duration cp_length(Standard standard, int format)
{
    return Duration::from_ms(cp_length_ms(standard, format));
}

Duration TimerSet::unit_duration(TimerUnit u) const
{
    switch (u) {
    case TimerUnit::Subframe: return Duration::sf(1);
    case TimerUnit::Slot: return slot_duration;
    case TimerUnit::PdcchPeriod: return pdcch_period;
    }
    return Duration::sf(1);
}

namespace {

std::vector<Duration> grid(const std::vector<int>& choices, Duration unit, bool extended)
{
    std::vector<Duration> out;
    for (int c : choices) out.push_back(unit * c);
    if (extended) {
        const auto ext = extension_grid(out.back());
        out.insert(out.end(), ext.begin(), ext.end());
    }
    return out;
}

}  // namespace

std::vector<Duration> TimerSet::rar_grid() const
{
    return grid(rar_window_choices, unit_duration(rar_unit), extended);
}

std::vector<Duration> TimerSet::cr_grid() const
{
    return grid(cr_timer_choices, unit_duration(cr_unit), extended);
}

Duration TimerSet::max_rar_window() const
{
    return rar_grid().back();
}

Duration TimerSet::max_cr_timer() const
{
    return cr_grid().back();
}

std::vector<Duration> extension_grid(Duration standard_max)
{
    // 16 whole-ms steps from the standard maximum up to 1 s (or just above the maximum if it is already past 1 s)
    const double lo = standard_max.millis();
    const double hi = std::max(kExtendedTimerCeiling.millis(), lo + kExtendedTimerValues);
    std::vector<Duration> out;
    for (int k = 1; k <= kExtendedTimerValues; ++k)
        out.push_back(Duration::ms(std::llround(lo + k * (hi - lo) / kExtendedTimerValues)));
    return out;
}

TimerSet standard_timers(Standard standard, int mu, Duration pdcch_period)
{
    TimerSet ts;
    ts.standard = standard;
    const std::vector<int> lte_cr = {8, 16, 24, 32, 40, 48, 56, 64};
    switch (standard) {
    case Standard::LTE:
        ts.rar_window_choices = {1, 2, 4, 6, 8, 10};
        ts.cr_timer_choices = lte_cr;
        break;
    case Standard::NBIOT:
        if (pdcch_period < Duration::ms(1) || pdcch_period > Duration::ms(10240))
            throw std::out_of_range("NB-IoT PDCCH period must be within 1 ms .. 10.24 s");
        ts.rar_window_choices = {2, 3, 4, 5, 6, 7, 8, 10};
        ts.rar_unit = TimerUnit::PdcchPeriod;
        ts.cr_timer_choices = {1, 2, 3, 4, 8, 16, 32, 64};
        ts.cr_unit = TimerUnit::PdcchPeriod;
        ts.pdcch_period = pdcch_period;
        break;
    case Standard::NR:
        ts.rar_window_choices = {1, 2, 4, 8, 10, 20, 40, 80};
        ts.rar_unit = TimerUnit::Slot;
        ts.cr_timer_choices = lte_cr;
        ts.slot_duration = timing::TimeBase(standard, mu).slot_duration();
        break;
    }
    return ts;
}

TimerSet extended_timers(TimerSet ts)
{
    ts.extended = true;
    return ts;
}

Duration max_rar_window(Standard standard, int mu, Duration pdcch_period)
{
    return standard_timers(standard, mu, pdcch_period).max_rar_window();
}

std::string to_string(TimerMode m)
{
    return m == TimerMode::UeAdapted ? "ue_adapted" : "bs_extended";
}

TimerMode timer_mode_from_string(const std::string& s)
{
    if (s == "ue_adapted" || s == "UeAdapted") return TimerMode::UeAdapted;
    if (s == "bs_extended" || s == "BsExtended") return TimerMode::BsExtended;
    throw std::invalid_argument("unknown timer mode '" + s + "'");
}

ReportedTimers default_reported(const TimerSet& ts)
{
    auto std_only = ts;
    std_only.extended = false;
    return {std_only.max_rar_window(), std_only.max_cr_timer()};
}

namespace {

Duration grid_ceiling(const std::vector<Duration>& g, Duration need, const char* what)
{
    for (auto v : g)
        if (v >= need) return v;
    throw std::domain_error(std::string(what) + " of " + std::to_string(need.millis()) + " ms exceeds the extended grid");
}

}  // namespace

EffectiveTimers effective_timers(const TimerSet& ts, TimerMode mode, Duration rtt, const ReportedTimers& reported)
{
    if (rtt.count() < 0) throw std::invalid_argument("negative RTT");
    if (mode == TimerMode::UeAdapted) return {reported.rar_window + rtt, reported.cr_timer + rtt};
    const auto ext = extended_timers(ts);
    return {grid_ceiling(ext.rar_grid(), reported.rar_window + rtt, "RAR window"),
            grid_ceiling(ext.cr_grid(), reported.cr_timer + rtt, "CR timer")};
}

EffectiveTimers effective_timers(const TimerSet& ts, TimerMode mode, Duration rtt)
{
    return effective_timers(ts, mode, rtt, default_reported(ts));
}

void validate(const Msg3Grant& g, Standard standard)
{
    if (g.time_offset_sf < 4) throw std::invalid_argument("Msg3 time offset below 4 SF");
    if (standard == Standard::NBIOT && g.time_offset_sf > 64) throw std::invalid_argument("NB-IoT Msg3 time offset above 64 SF");
}

}  // namespace ntnra::raconfig
