#include "ntnra/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <queue>
#include <stdexcept>

#include <fmt/format.h>

#include "ntnra/channel.hpp"

namespace ntnra::engine {

using protocol::Marker;

void Scenario::validate() const
{
    if (n_ues < 1) throw std::invalid_argument("n_ues must be at least 1");
    if (rtt.count() < 0 || rtt > channel::kMaxRtt) throw std::invalid_argument("rtt outside [0, 600 ms]");
    if (cell_rtt && (cell_rtt->count() < 0 || *cell_rtt > channel::kMaxRtt))
        throw std::invalid_argument("cell rtt outside [0, 600 ms]");
    if (max_sim_time.count() <= 0) throw std::invalid_argument("max_sim_time must be positive");
    if (processing.count() < 0) throw std::invalid_argument("negative processing delay");
    if (max_tac < 0) throw std::invalid_argument("negative TAC limit");
    raconfig::validate(raconfig::Msg3Grant{msg3_offset_sf, 0, 0}, standard);
    if (max_msg3_tx < 1 || max_msg4_tx < 1) throw std::invalid_argument("need at least one Msg3 and Msg4 transmission");
    if (backoff_max.count() < 0) throw std::invalid_argument("negative backoff");
    if (contention_free && n_ues > 32) throw std::invalid_argument("contention-free pool holds at most 32 UEs");
    if (contention_free && forced_preamble) throw std::invalid_argument("forced preamble and contention-free access exclude each other");
    (void)prach_config();
}

raconfig::PrachConfig Scenario::prach_config() const
{
    auto p = prach ? *prach : raconfig::builtin_prach(standard, prach_index);
    if (p.standard() != standard) throw std::invalid_argument("PRACH row belongs to another standard");
    if (preamble_format) p = p.with_format(*preamble_format);
    return p;
}

bool KpiReport::all_connected() const
{
    return std::all_of(ues.begin(), ues.end(), [](const UeKpi& u) { return u.access_time.has_value(); });
}

std::optional<double> KpiReport::mean_access_ms() const
{
    if (ues.empty() || !all_connected()) return std::nullopt;
    double sum = 0;
    for (const auto& u : ues) sum += u.access_time->millis();
    return sum / static_cast<double>(ues.size());
}

Stage fold_markers(const std::set<Marker>& m)
{
    const auto has = [&](Marker k) { return m.count(k) > 0; };
    if (has(Marker::Connected)) return Stage::Connected;
    if (has(Marker::Msg3Decoded) || has(Marker::ContentionLost)) return Stage::Msg4Failed;
    if (has(Marker::Msg3DecodeFail)) return Stage::Msg3DecodeFail;
    if (has(Marker::Msg3SchedMiss) || has(Marker::RarAccepted)) return Stage::Msg3SchedMiss;
    if (has(Marker::RarWithdrawn)) return Stage::Msg2Withdrawn;
    if (has(Marker::Msg1Detected)) return Stage::Msg2Timeout;
    return Stage::Msg1Undetected;
}

namespace {

enum class Kind { UeTrigger, UeTimer, BsTimer, ToBs, ToUe };

struct Event {
    TimeStamp at;
    int side;  // 0 = BS, 1 = UE
    std::uint64_t seq;
    Kind kind;
    int ue;
    protocol::TimerEvent timer;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const
    {
        if (a.at != b.at) return a.at > b.at;
        if (a.side != b.side) return a.side > b.side;
        return a.seq > b.seq;
    }
};

class Simulation {
public:
    explicit Simulation(const Scenario& s) : s_(s)
    {
        s.validate();
        const auto prach = s.prach_config();
        protocol::StrategyInputs in;
        in.standard = s.standard;
        in.mu = s.mu;
        in.prach = prach;
        in.timers = raconfig::standard_timers(s.standard, s.mu, s.pdcch_period);
        in.reported = s.reported;
        in.ue_rtt_estimate = std::max(Duration{0}, s.rtt + s.gnss_error);
        in.cell_rtt = s.cell_rtt.value_or(s.rtt);
        in.max_tac = s.max_tac;

        protocol::Common c;
        c.standard = s.standard;
        c.mu = s.mu;
        c.processing = s.processing;
        c.msg3_offset_sf = s.msg3_offset_sf;
        c.max_msg3_tx = s.max_msg3_tx;
        c.max_tac = s.max_tac;
        if (s.contention_free)
            for (int i = 0; i < s.n_ues; ++i) c.dedicated_preambles.insert(63 - i);

        protocol::BsConfig bc;
        bc.common = c;
        bc.max_msg4_tx = s.max_msg4_tx;
        bc.collision = s.collision;
        bs_.emplace(bc, protocol::apply_strategy_bs(s.strategy, in));

        const auto ue_hooks = protocol::apply_strategy_ue(s.strategy, in);
        for (int i = 0; i < s.n_ues; ++i) {
            protocol::UeConfig uc;
            uc.ue_id = i;
            uc.common = c;
            uc.backoff_max = s.backoff_max;
            uc.forced_preamble = s.forced_preamble;
            if (s.contention_free) uc.dedicated_preamble = 63 - i;
            uc.seed = s.seed;
            ues_.emplace_back(uc, ue_hooks);
            channels_.emplace_back(s.rtt);
            markers_.emplace_back();
        }
    }

    KpiReport execute()
    {
        for (int i = 0; i < s_.n_ues; ++i) push(TimeStamp(0) + dl(i), 1, Kind::UeTrigger, i, {});
        const TimeStamp limit(s_.max_sim_time.count());
        TimeStamp now;
        std::uint64_t processed = 0;
        while (!queue_.empty()) {
            const Event ev = queue_.top();
            if (ev.at > limit) break;
            queue_.pop();
            if (ev.at < now) throw std::logic_error("event queue went backwards");
            now = ev.at;
            ++processed;
            dispatch(ev);
            if (done()) break;
        }
        return report(now, processed);
    }

private:
    Duration dl(int ue) const { return channels_[ue].downlink().delay(); }

    void push(TimeStamp at, int side, Kind k, int ue, protocol::TimerEvent t)
    {
        queue_.push(Event{at, side, seq_++, k, ue, t});
    }

    bool done() const
    {
        return bs_->idle() && std::all_of(ues_.begin(), ues_.end(), [](const protocol::UeMachine& u) {
                   return u.state() == protocol::UeState::Connected;
               });
    }

    void dispatch(const Event& ev)
    {
        switch (ev.kind) {
        case Kind::UeTrigger: ue_step(ev, protocol::Trigger{}); break;
        case Kind::UeTimer: ue_step(ev, ev.timer); break;
        case Kind::ToUe: {
            auto f = channels_[ev.ue].downlink().deliver(ev.at);
            ue_step(ev, protocol::Delivered{std::move(f.message)});
            break;
        }
        case Kind::BsTimer: bs_step(ev.at, ev.timer); break;
        case Kind::ToBs: {
            auto f = channels_[ev.ue].uplink().deliver(ev.at);
            bs_step(ev.at, protocol::Delivered{std::move(f.message)});
            break;
        }
        }
    }

    void ue_step(const Event& ev, const protocol::Input& in)
    {
        const int i = ev.ue;
        const auto local = ev.at - dl(i);
        auto r = ues_[i].step(local, in);
        if (r.ignored) return;
        record(ev.at, "UE" + std::to_string(i), r);
        for (auto& a : r.actions) {
            std::visit(
                [&](auto& x) {
                    using T = std::decay_t<decltype(x)>;
                    if constexpr (std::is_same_v<T, protocol::Transmit>) {
                        if (auto rel = channels_[i].uplink().send(x.msg, ev.at)) push(*rel, 0, Kind::ToBs, i, {});
                    } else if constexpr (std::is_same_v<T, protocol::SetTimer>) {
                        push(x.at + dl(i), 1, Kind::UeTimer, i, x.timer);
                    } else {
                        observe(x);
                    }
                },
                a);
        }
    }

    void bs_step(TimeStamp now, const protocol::Input& in)
    {
        auto r = bs_->step(now, in);
        if (r.ignored) return;
        record(now, "BS", r);
        for (auto& a : r.actions) {
            std::visit(
                [&](auto& x) {
                    using T = std::decay_t<decltype(x)>;
                    if constexpr (std::is_same_v<T, protocol::Transmit>) {
                        // the downlink is a broadcast; each UE filters on its identifiers
                        for (int i = 0; i < s_.n_ues; ++i)
                            if (auto rel = channels_[i].downlink().send(x.msg, now)) push(*rel, 1, Kind::ToUe, i, {});
                    } else if constexpr (std::is_same_v<T, protocol::SetTimer>) {
                        push(x.at, 0, Kind::BsTimer, -1, x.timer);
                    } else {
                        observe(x);
                    }
                },
                a);
        }
    }

    void observe(const protocol::Observe& o)
    {
        if (o.who.ue < 0 || o.who.ue >= s_.n_ues) return;
        markers_[o.who.ue][o.who.attempt].insert(o.marker);
        if (o.marker == Marker::Msg1Collided) ++collisions_[o.who.ue];
    }

    void record(TimeStamp at, std::string side, const protocol::StepResult& r)
    {
        if (!s_.record_trace) return;
        trace_.push_back({at, std::move(side), r.state_before, r.event, r.state_after, r.detail});
    }

    KpiReport report(TimeStamp end, std::uint64_t processed)
    {
        KpiReport out;
        out.rtt = s_.rtt;
        out.strategy = protocol::strategy_label(s_.strategy);
        out.end_time = end;
        out.events = processed;
        out.collision_count = bs_->collisions();
        for (int i = 0; i < s_.n_ues; ++i) {
            const auto& u = ues_[i];
            UeKpi k;
            k.ue = i;
            if (u.connected_at() && u.first_msg1()) k.access_time = *u.connected_at() - *u.first_msg1();
            k.retries = u.retry_count();
            k.attempts = u.attempt() + 1;
            k.collisions = collisions_[i];
            for (const auto& [attempt, m] : markers_[i]) k.furthest_stage = std::max(k.furthest_stage, fold_markers(m));
            out.ues.push_back(k);
        }
        out.trace = std::move(trace_);
        return out;
    }

    const Scenario& s_;
    std::optional<protocol::BsMachine> bs_;
    std::vector<protocol::UeMachine> ues_;
    std::vector<channel::DelayChannel<protocol::RaMessage>> channels_;
    std::vector<std::map<int, std::set<Marker>>> markers_;
    std::map<int, int> collisions_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::uint64_t seq_ = 0;
    std::vector<TraceRecord> trace_;
};

}  // namespace

KpiReport run(const Scenario& s)
{
    return Simulation(s).execute();
}

KpiReport multi_ue_run(const Scenario& s)
{
    if (s.n_ues < 2) throw std::invalid_argument("multi-UE run needs at least two UEs");
    return run(s);
}

std::vector<CurvePoint> sweep_rtt(const Scenario& base, const std::vector<Duration>& rtts,
                                  const std::vector<protocol::CorrectionStrategy>& strategies)
{
    std::vector<CurvePoint> out;
    for (const auto& st : strategies) {
        for (auto rtt : rtts) {
            auto s = base;
            s.strategy = st;
            s.rtt = rtt;
            s.cell_rtt.reset();
            s.n_ues = 1;
            s.record_trace = false;
            const auto r = run(s);
            out.push_back({rtt, protocol::strategy_label(st), r.ues[0].access_time, r.ues[0].retries, r.ues[0].furthest_stage});
        }
    }
    return out;
}

std::vector<protocol::FixFlags> ladder_flags()
{
    return {
        {false, false, false, false},
        {true, false, false, false},
        {true, true, false, false},
        {true, true, true, false},
        {true, true, true, true},
    };
}

std::vector<LadderStep> run_ladder(const Scenario& base)
{
    std::vector<LadderStep> out;
    for (const auto& f : ladder_flags()) {
        auto s = base;
        s.strategy.fix = f;
        s.n_ues = 1;
        s.record_trace = false;
        const auto r = run(s);
        out.push_back({f, r.ues[0].furthest_stage, r.ues[0].access_time});
    }
    return out;
}

bool strictly_progresses(const std::vector<LadderStep>& steps)
{
    for (std::size_t i = 1; i < steps.size(); ++i)
        if (!(steps[i - 1].stage < steps[i].stage)) return false;
    return true;
}

std::string format_ms(Duration d)
{
    return fmt::format("{:.6f}", d.millis());
}

namespace {

std::string csv_field(const std::string& v)
{
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

}  // namespace

std::string kpi_csv_header()
{
    return "rtt_ms,strategy,access_time_ms,retries,furthest_stage\n";
}

std::string kpi_csv_row(const CurvePoint& p)
{
    return fmt::format("{},{},{},{},{}\n", format_ms(p.rtt), csv_field(p.strategy),
                       p.access_time ? format_ms(*p.access_time) : std::string("NA"), p.retries,
                       protocol::to_string(p.furthest_stage));
}

std::string kpi_csv(const KpiReport& r)
{
    std::string out = kpi_csv_header();
    for (const auto& u : r.ues) out += kpi_csv_row({r.rtt, r.strategy, u.access_time, u.retries, u.furthest_stage});
    return out;
}

std::string kpi_csv(const std::vector<CurvePoint>& points)
{
    std::string out = kpi_csv_header();
    for (const auto& p : points) out += kpi_csv_row(p);
    return out;
}

std::string trace_csv(const KpiReport& r)
{
    std::string out = "time,side,state_before,event,state_after,detail\n";
    for (const auto& t : r.trace)
        out += fmt::format("{:.6f},{},{},{},{},{}\n", t.time.millis(), csv_field(t.side), csv_field(t.state_before),
                           csv_field(t.event), csv_field(t.state_after), csv_field(t.detail));
    return out;
}

}  // namespace ntnra::engine
