#include "ntnra/protocol.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ntnra::protocol {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int mod10(int v) { return ((v % 10) + 10) % 10; }

int tid_units(Standard s, int mu) { return s == Standard::NR ? identity::nr_tid_slots_per_sf(mu) : 1; }

std::string ms(TimeStamp t)
{
    std::ostringstream o;
    o << "f" << t.frame() << "/sf" << t.sf();
    if (t.sample_in_sf() != 0) o << "+" << t.sample_in_sf();
    return o.str();
}

std::string tags_str(const std::vector<Tag>& tags)
{
    std::string s;
    for (const auto& t : tags) {
        if (!s.empty()) s += ';';
        s += "ue" + std::to_string(t.ue) + "#" + std::to_string(t.attempt);
    }
    return s;
}

}  // namespace

CorrectionStrategy CorrectionStrategy::none()
{
    return {CorrectionMode::NoCorrection, {}, raconfig::TimerMode::UeAdapted};
}

CorrectionStrategy CorrectionStrategy::sample_ta()
{
    return {CorrectionMode::SampleTaOnly, {}, raconfig::TimerMode::UeAdapted};
}

CorrectionStrategy CorrectionStrategy::ta()
{
    return {CorrectionMode::SfLevelTA, FixFlags::all(), raconfig::TimerMode::UeAdapted};
}

CorrectionStrategy CorrectionStrategy::td()
{
    return {CorrectionMode::SfLevelTD, FixFlags::all(), raconfig::TimerMode::BsExtended};
}

std::string to_string(CorrectionMode m)
{
    switch (m) {
    case CorrectionMode::NoCorrection: return "none";
    case CorrectionMode::SampleTaOnly: return "sample_ta";
    case CorrectionMode::SfLevelTA: return "sf_ta";
    case CorrectionMode::SfLevelTD: return "sf_td";
    }
    return "?";
}

CorrectionMode mode_from_string(const std::string& s)
{
    if (s == "none" || s == "NoCorrection") return CorrectionMode::NoCorrection;
    if (s == "sample_ta" || s == "SampleTaOnly") return CorrectionMode::SampleTaOnly;
    if (s == "sf_ta" || s == "TA" || s == "SfLevelTA") return CorrectionMode::SfLevelTA;
    if (s == "sf_td" || s == "TD" || s == "SfLevelTD") return CorrectionMode::SfLevelTD;
    throw std::invalid_argument("unknown correction mode '" + s + "'");
}

std::string strategy_label(const CorrectionStrategy& s)
{
    switch (s.mode) {
    case CorrectionMode::NoCorrection: return "none";
    case CorrectionMode::SampleTaOnly: return "sample_ta";
    case CorrectionMode::SfLevelTA: return "TA";
    case CorrectionMode::SfLevelTD: return "TD";
    }
    return "?";
}

CorrectionStrategy strategy_from_label(const std::string& s)
{
    if (s == "TA" || s == "ta") return CorrectionStrategy::ta();
    if (s == "TD" || s == "td") return CorrectionStrategy::td();
    if (s == "none") return CorrectionStrategy::none();
    if (s == "sample_ta") return CorrectionStrategy::sample_ta();
    throw std::invalid_argument("unknown strategy '" + s + "'");
}

std::string to_string(const FixFlags& f)
{
    std::string s;
    const auto add = [&](bool on, const char* n) {
        if (!on) return;
        if (!s.empty()) s += '+';
        s += n;
    };
    add(f.rao, "rao");
    add(f.rnti, "rnti");
    add(f.sched, "sched");
    add(f.seq, "seq");
    return s.empty() ? "none" : s;
}

FixFlags fix_flags_from_string(const std::string& raw)
{
    FixFlags f;
    std::string tok;
    std::string s = raw;
    std::replace(s.begin(), s.end(), '+', ',');
    std::istringstream in(s);
    while (std::getline(in, tok, ',')) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        if (tok.empty() || tok == "none") continue;
        if (tok == "all") f = FixFlags::all();
        else if (tok == "rao") f.rao = true;
        else if (tok == "rnti") f.rnti = true;
        else if (tok == "sched") f.sched = true;
        else if (tok == "seq") f.seq = true;
        else throw std::invalid_argument("unknown fix flag '" + tok + "'");
    }
    return f;
}

std::string to_string(UeState s)
{
    switch (s) {
    case UeState::Idle: return "Idle";
    case UeState::GenerateMsg1: return "GenerateMsg1";
    case UeState::WaitMsg2: return "WaitMsg2";
    case UeState::GenerateMsg3: return "GenerateMsg3";
    case UeState::WaitMsg4: return "WaitMsg4";
    case UeState::Connected: return "Connected";
    }
    return "?";
}

std::string to_string(BsState s)
{
    switch (s) {
    case BsState::WaitMsg1: return "WaitMsg1";
    case BsState::GenerateMsg2: return "GenerateMsg2";
    case BsState::WaitMsg3: return "WaitMsg3";
    case BsState::GenerateMsg4: return "GenerateMsg4";
    case BsState::Done: return "Done";
    }
    return "?";
}

std::string to_string(Stage s)
{
    switch (s) {
    case Stage::Msg1Undetected: return "Msg1-undetected";
    case Stage::Msg2Timeout: return "Msg2-timeout";
    case Stage::Msg2Withdrawn: return "Msg2-withdrawn";
    case Stage::Msg3SchedMiss: return "Msg3-sched-miss";
    case Stage::Msg3DecodeFail: return "Msg3-decode-fail";
    case Stage::Msg4Failed: return "Msg4-failed";
    case Stage::Connected: return "Connected";
    }
    return "?";
}

std::string to_string(Marker m)
{
    switch (m) {
    case Marker::Msg1Sent: return "msg1_sent";
    case Marker::Msg1Detected: return "msg1_detected";
    case Marker::Msg1Collided: return "msg1_collided";
    case Marker::RarWithdrawn: return "rar_withdrawn";
    case Marker::RarLate: return "rar_late";
    case Marker::RarAccepted: return "rar_accepted";
    case Marker::Msg3SchedMiss: return "msg3_sched_miss";
    case Marker::Msg3DecodeFail: return "msg3_decode_fail";
    case Marker::Msg3Decoded: return "msg3_decoded";
    case Marker::ContentionLost: return "contention_lost";
    case Marker::Connected: return "connected";
    }
    return "?";
}

std::string to_string(CollisionModel m)
{
    return m == CollisionModel::DropBoth ? "drop_both" : "resolve_at_msg3";
}

CollisionModel collision_model_from_string(const std::string& s)
{
    if (s == "drop_both") return CollisionModel::DropBoth;
    if (s == "resolve_at_msg3") return CollisionModel::ResolveAtMsg3;
    throw std::invalid_argument("unknown collision model '" + s + "'");
}

std::string describe(const RaMessage& m)
{
    return std::visit(
        overloaded{
            [](const Msg1& x) { return "Msg1 preamble=" + std::to_string(x.preamble_index); },
            [](const Msg2& x) {
                return "Msg2 ra_rnti=" + std::to_string(x.ra_rnti.value) + " rapid=" + std::to_string(x.preamble_index) +
                       " tac=" + std::to_string(x.tac) + " tc_rnti=" + std::to_string(x.temp_c_rnti) +
                       " k=" + std::to_string(x.grant.time_offset_sf);
            },
            [](const Msg3& x) {
                return "Msg3 tc_rnti=" + std::to_string(x.temp_c_rnti) + " id=" + std::to_string(x.c_rnti) +
                       " sf=" + std::to_string(x.ue_sf_used) + " tx=" + std::to_string(x.harq_tx);
            },
            [](const Msg4& x) {
                return "Msg4 tc_rnti=" + std::to_string(x.temp_c_rnti) + " echo=" + std::to_string(x.echoed_c_rnti);
            },
            [](const Harq& x) {
                return std::string(x.ack ? "ACK" : "NACK") + " tc_rnti=" + std::to_string(x.temp_c_rnti);
            },
        },
        m.body);
}

void validate(const CorrectionStrategy& s, const StrategyInputs& in)
{
    if (in.ue_rtt_estimate.count() < 0) throw std::invalid_argument("negative RTT estimate");
    if (in.cell_rtt && in.cell_rtt->count() < 0) throw std::invalid_argument("negative cell RTT");
    if (s.mode == CorrectionMode::SfLevelTD && !in.cell_rtt)
        throw std::invalid_argument("SF-level TD needs the cell RTT");
    if (s.fix.sched && !in.cell_rtt) throw std::invalid_argument("the Msg3 scheduling fix needs the cell RTT");
    if (s.timer_mode == raconfig::TimerMode::BsExtended && !in.cell_rtt)
        throw std::invalid_argument("BS-extended timers need the cell RTT");
    if (in.max_tac < 0) throw std::invalid_argument("negative TAC limit");
}

namespace {

raconfig::ReportedTimers reported_of(const StrategyInputs& in)
{
    return in.reported.value_or(raconfig::default_reported(in.timers));
}

}  // namespace

UeHooks apply_strategy_ue(const CorrectionStrategy& s, const StrategyInputs& in)
{
    validate(s, in);
    UeHooks h;
    h.tx_prach = in.prach;
    const auto est = in.ue_rtt_estimate;
    switch (s.mode) {
    case CorrectionMode::NoCorrection: break;
    case CorrectionMode::SampleTaOnly: {
        const Duration cap(timing::kTacStepSamples * in.max_tac);
        h.msg1_advance = std::min(est, cap);
        h.own_sample_ta = h.msg1_advance;
        h.total_ta_cap = cap;
        break;
    }
    case CorrectionMode::SfLevelTA: {
        // the UE's own advance is not bound by the RAR TAC field
        const auto d = timing::decompose_delay(est, std::numeric_limits<int>::max());
        h.own_sample_ta = d.ta.sample_part();
        // the shifted table already places the preamble sf_part early
        h.msg1_advance = d.ta.sample_part();
        if (s.fix.rao) {
            h.tx_prach = raconfig::ue_shifted_rao(in.prach, d.ta);
            h.anchor_shift = d.ta.sf_part();
        }
        if (s.fix.rnti) h.tid_correction = identity::UeTaCorrection{d.ta.sfa, d.ta.fa};
        if (s.fix.seq) h.seq_sf_shift = d.ta.sfa;
        break;
    }
    case CorrectionMode::SfLevelTD: break;
    }
    const auto rep = reported_of(in);
    if (s.timer_mode == raconfig::TimerMode::UeAdapted) {
        h.rar_len = rep.rar_window + est;
        h.cr_len = rep.cr_timer + est;
    } else {
        const auto eff = raconfig::effective_timers(in.timers, s.timer_mode, *in.cell_rtt, rep);
        h.rar_open_delay = eff.rar_window - rep.rar_window;
        h.rar_len = rep.rar_window;
        h.cr_open_delay = eff.cr_timer - rep.cr_timer;
        h.cr_len = rep.cr_timer;
    }
    return h;
}

BsHooks apply_strategy_bs(const CorrectionStrategy& s, const StrategyInputs& in)
{
    validate(s, in);
    BsHooks h;
    h.monitored = in.prach;
    const std::int64_t whole = in.cell_rtt ? in.cell_rtt->whole_sf() : 0;
    if (s.mode == CorrectionMode::SfLevelTD) {
        if (s.fix.rao) {
            h.monitored = raconfig::bs_delayed_rao(in.prach, *in.cell_rtt);
            h.rao_delay = Duration::sf(whole);
        }
        if (s.fix.rnti) h.tid_correction = identity::BsTdCorrection{static_cast<int>(whole % 10), whole / 10};
        if (s.fix.seq) h.seq_sf_shift = -static_cast<int>(whole % 10);
    }
    if (s.fix.sched) h.sched_shift = Duration::sf(whole);
    if (s.timer_mode == raconfig::TimerMode::BsExtended) {
        const auto rep = reported_of(in);
        const auto eff = raconfig::effective_timers(in.timers, s.timer_mode, *in.cell_rtt, rep);
        h.rar_hold = eff.rar_window - rep.rar_window;
        h.cr_hold = eff.cr_timer - rep.cr_timer;
    }
    return h;
}

// ---------------------------------------------------------------- UE

UeMachine::UeMachine(UeConfig cfg, UeHooks hooks) : cfg_(std::move(cfg)), hooks_(std::move(hooks))
{
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                      static_cast<std::uint32_t>(cfg_.ue_id), 0x7e5u};
    rng_.seed(seq);
    if (cfg_.preamble_pool < 1 || cfg_.preamble_pool > 64) throw std::invalid_argument("preamble pool must be 1..64");
    if (cfg_.forced_preamble && (*cfg_.forced_preamble < 0 || *cfg_.forced_preamble >= cfg_.preamble_pool))
        throw std::invalid_argument("forced preamble outside pool");
    if (cfg_.backoff_max.count() < 0) throw std::invalid_argument("negative backoff");
    if (cfg_.common.max_msg3_tx < 1) throw std::invalid_argument("need at least one Msg3 transmission");
}

SetTimer UeMachine::arm(TimerKind k, TimeStamp at, int arg)
{
    return SetTimer{at, TimerEvent{k, 0, arg, ++gen_[k]}};
}

Duration UeMachine::ul_ta() const
{
    auto ta = hooks_.own_sample_ta + Duration(timing::kTacStepSamples * tac_);
    if (hooks_.total_ta_cap) ta = std::min(ta, *hooks_.total_ta_cap);
    return ta;
}

void UeMachine::schedule_msg1(TimeStamp now, StepResult& r)
{
    tx_rao_ = raconfig::next_rao(hooks_.tx_prach, now + hooks_.msg1_advance);
    anchor_ = tx_rao_ + hooks_.anchor_shift;
    const auto tx = tx_rao_ - hooks_.msg1_advance;
    r.actions.push_back(arm(RaoTick, tx));
    r.detail += (r.detail.empty() ? "" : "; ") + std::string("next RAO ") + ms(tx_rao_);
}

void UeMachine::retry(TimeStamp now, StepResult& r, const std::string& why)
{
    for (auto& g : gen_) ++g;
    ++retry_count_;
    ++power_ramp_;
    const auto steps = std::uniform_int_distribution<std::int64_t>(0, cfg_.backoff_max.count() / timing::kSamplesPerMs)(rng_);
    backoff_deadline_ = now + Duration::ms(steps);
    ra_rnti_.reset();
    temp_c_rnti_ = 0;
    tac_ = 0;
    state_ = UeState::GenerateMsg1;
    r.detail = why + "; backoff " + std::to_string(steps) + " ms, ramp " + std::to_string(power_ramp_);
    schedule_msg1(*backoff_deadline_, r);
}

StepResult UeMachine::step(TimeStamp now, const Input& in)
{
    if (last_ && now < *last_) throw std::logic_error("UE event earlier than the previous one");
    last_ = now;
    StepResult r;
    r.state_before = to_string(state_);
    std::visit(overloaded{
                   [&](const Trigger&) {
                       r.event = "trigger";
                       if (state_ != UeState::Idle) {
                           r.detail = "already active";
                           return;
                       }
                       state_ = UeState::GenerateMsg1;
                       schedule_msg1(now, r);
                   },
                   [&](const TimerEvent& t) { on_timer(now, t, r); },
                   [&](const Delivered& d) { on_delivery(now, d.msg, r); },
               },
               in);
    r.state_after = to_string(state_);
    return r;
}

void UeMachine::on_timer(TimeStamp now, const TimerEvent& t, StepResult& r)
{
    if (t.kind < 0 || t.kind >= kTimerKinds || t.token != gen_[t.kind]) {
        r.ignored = true;
        return;
    }
    const auto& c = cfg_.common;
    switch (static_cast<TimerKind>(t.kind)) {
    case RaoTick: {
        r.event = "rao_tick";
        if (state_ != UeState::GenerateMsg1) return;
        ++attempt_;
        if (cfg_.dedicated_preamble)
            preamble_ = *cfg_.dedicated_preamble;
        else if (cfg_.forced_preamble && attempt_ == 0)
            preamble_ = *cfg_.forced_preamble;
        else
            preamble_ = std::uniform_int_distribution<int>(0, cfg_.preamble_pool - 1)(rng_);
        const int raw = identity::raw_t_id(c.standard, c.mu, tx_rao_);
        const int tid = identity::corrected_t_id(raw, hooks_.tid_correction, tid_units(c.standard, c.mu));
        ra_rnti_ = identity::ra_rnti_for(c.standard, tid, c.rnti);
        r.actions.push_back(Transmit{RaMessage{Msg1{preamble_, now}, {tag()}}});
        r.actions.push_back(Observe{tag(), Marker::Msg1Sent});
        if (!first_msg1_) first_msg1_ = now;
        rar_open_ = anchor_ + c.processing + hooks_.rar_open_delay;
        rar_close_ = rar_open_ + hooks_.rar_len;
        state_ = UeState::WaitMsg2;
        r.actions.push_back(arm(RarWindowEnd, rar_close_));
        r.detail = "Msg1 preamble=" + std::to_string(preamble_) + " rao=" + ms(tx_rao_) + " t_id=" + std::to_string(tid) +
                   " ra_rnti=" + std::to_string(ra_rnti_->value) + " window=" + ms(rar_open_) + ".." + ms(rar_close_);
        return;
    }
    case RarWindowEnd:
        r.event = "rar_window_expiry";
        if (state_ == UeState::WaitMsg2) retry(now, r, "RAR window expired");
        return;
    case Msg3Tx: {
        r.event = "msg3_tx";
        if (state_ != UeState::GenerateMsg3 && state_ != UeState::WaitMsg4) return;
        const int sf_used = mod10(msg3_label_.sf() + hooks_.seq_sf_shift);
        r.actions.push_back(Transmit{RaMessage{Msg3{temp_c_rnti_, c_rnti_, sf_used, msg3_tx_}, {tag()}}});
        ++msg3_tx_;
        state_ = UeState::WaitMsg4;
        cr_open_ = msg3_label_ + hooks_.cr_open_delay;
        cr_close_ = cr_open_ + hooks_.cr_len;
        r.actions.push_back(arm(CrWindowEnd, cr_close_));
        r.detail = "Msg3 tx=" + std::to_string(msg3_tx_) + " for " + ms(msg3_label_) + " seq_sf=" + std::to_string(sf_used) +
                   " ta=" + std::to_string(ul_ta().count()) + " window=" + ms(cr_open_) + ".." + ms(cr_close_);
        return;
    }
    case CrWindowEnd:
        r.event = "cr_timer_expiry";
        if (state_ == UeState::WaitMsg4) retry(now, r, "CR timer expired");
        return;
    case HarqAckTx:
        r.event = "harq_tx";
        r.actions.push_back(Transmit{RaMessage{Harq{true, temp_c_rnti_}, {tag()}}});
        r.detail = "Msg4 ACK";
        return;
    case kTimerKinds: break;
    }
}

void UeMachine::on_delivery(TimeStamp now, const RaMessage& m, StepResult& r)
{
    const auto& c = cfg_.common;
    const bool mine = std::find(m.tags.begin(), m.tags.end(), tag()) != m.tags.end();
    r.event = "rx " + describe(m);
    std::visit(
        overloaded{
            [&](const Msg2& x) {
                if (state_ != UeState::WaitMsg2) {
                    r.detail = "not waiting for a RAR";
                    return;
                }
                if (!(x.ra_rnti == *ra_rnti_)) {
                    if (mine) r.actions.push_back(Observe{tag(), Marker::RarWithdrawn});
                    r.detail = "RA-RNTI " + std::to_string(x.ra_rnti.value) + " != own " + std::to_string(ra_rnti_->value) +
                               ", withdrawn";
                    return;
                }
                if (x.preamble_index != preamble_) {
                    r.detail = "preamble id mismatch";
                    return;
                }
                if (now < rar_open_ || now >= rar_close_) {
                    if (mine) r.actions.push_back(Observe{tag(), Marker::RarLate});
                    r.detail = "outside RAR window " + ms(rar_open_) + ".." + ms(rar_close_);
                    return;
                }
                raconfig::validate(x.grant, c.standard);
                if (x.tac < 0 || x.tac > c.max_tac) {
                    r.detail = "malformed TAC " + std::to_string(x.tac);
                    return;
                }
                ++gen_[RarWindowEnd];
                tac_ = x.tac;
                temp_c_rnti_ = x.temp_c_rnti;
                r.actions.push_back(Observe{tag(), Marker::RarAccepted});
                if (cfg_.dedicated_preamble) {
                    state_ = UeState::Connected;
                    connected_at_ = now;
                    r.actions.push_back(Observe{tag(), Marker::Connected});
                    r.detail = "contention-free access complete";
                    return;
                }
                c_rnti_ = std::uniform_int_distribution<int>(1, 0xFFEF)(rng_);
                state_ = UeState::GenerateMsg3;
                msg3_label_ = now.sf_floor() + Duration::sf(x.grant.time_offset_sf);
                msg3_tx_ = 0;
                r.actions.push_back(arm(Msg3Tx, msg3_label_ - ul_ta()));
                r.detail = "RAR accepted, Msg3 granted for " + ms(msg3_label_);
            },
            [&](const Msg4& x) {
                if (x.temp_c_rnti != temp_c_rnti_ || temp_c_rnti_ == 0) {
                    r.detail = "not addressed to this UE";
                    return;
                }
                const auto ack_at = now.sf_floor() + Duration::sf(c.harq_retx_offset_sf) - ul_ta();
                if (state_ == UeState::Connected) {
                    if (x.echoed_c_rnti == c_rnti_) {
                        r.actions.push_back(arm(HarqAckTx, ack_at));
                        r.detail = "Msg4 repeat, ACK again";
                    }
                    return;
                }
                if (state_ != UeState::WaitMsg4) {
                    r.detail = "not waiting for Msg4";
                    return;
                }
                if (now < cr_open_ || now >= cr_close_) {
                    r.detail = "outside CR window";
                    return;
                }
                if (x.echoed_c_rnti != c_rnti_) {
                    r.actions.push_back(Observe{tag(), Marker::ContentionLost});
                    r.detail = "contention lost";
                    return;
                }
                ++gen_[CrWindowEnd];
                state_ = UeState::Connected;
                connected_at_ = now;
                r.actions.push_back(Observe{tag(), Marker::Connected});
                r.actions.push_back(arm(HarqAckTx, ack_at));
                r.detail = "contention resolved, C-RNTI " + std::to_string(temp_c_rnti_);
            },
            [&](const Harq& x) {
                if (x.temp_c_rnti != temp_c_rnti_ || state_ != UeState::WaitMsg4) {
                    r.detail = "not addressed to this UE";
                    return;
                }
                if (x.ack) {
                    r.detail = "Msg3 acknowledged";
                    return;
                }
                if (msg3_tx_ >= c.max_msg3_tx) {
                    r.detail = "NACK after last Msg3 transmission";
                    return;
                }
                msg3_label_ = now.sf_floor() + Duration::sf(c.harq_retx_offset_sf);
                r.actions.push_back(arm(Msg3Tx, msg3_label_ - ul_ta(), 1));
                r.detail = "NACK, Msg3 retransmission for " + ms(msg3_label_);
            },
            [&](const auto&) { r.detail = "unexpected uplink message on downlink"; },
        },
        m.body);
}

// ---------------------------------------------------------------- BS

BsMachine::BsMachine(BsConfig cfg, BsHooks hooks)
    : cfg_(std::move(cfg)),
      hooks_(std::move(hooks)),
      cp_(raconfig::cp_length(hooks_.monitored.standard(), hooks_.monitored.preamble_format())),
      next_temp_(cfg_.first_temp_c_rnti)
{
    if (cfg_.max_msg4_tx < 1) throw std::invalid_argument("need at least one Msg4 transmission");
    raconfig::validate(raconfig::Msg3Grant{cfg_.common.msg3_offset_sf, 0, 0}, cfg_.common.standard);
}

SetTimer BsMachine::arm(TimerKind k, TimeStamp at, std::int64_t key, int arg)
{
    return SetTimer{at, TimerEvent{k, key, arg, 0}};
}

Msg4 BsMachine::contention_resolution(const Msg3& msg3)
{
    return Msg4{msg3.temp_c_rnti, msg3.c_rnti};
}

sequences::SequenceParams BsMachine::seq_params(int temp_c_rnti) const
{
    return {sequences::pusch_x1_init_part(temp_c_rnti, cfg_.common.cell_id), cfg_.common.dmrs};
}

bool BsMachine::idle() const
{
    if (!rao_buckets_.empty()) return false;
    return std::all_of(attempts_.begin(), attempts_.end(), [](const BsAttempt& a) { return a.state == BsState::Done; });
}

BsAttempt* BsMachine::find_by_rnti(int temp_c_rnti, BsState state)
{
    for (auto it = attempts_.rbegin(); it != attempts_.rend(); ++it)
        if (it->temp_c_rnti == temp_c_rnti && it->state == state) return &*it;
    return nullptr;
}

StepResult BsMachine::step(TimeStamp now, const Input& in)
{
    if (last_ && now < *last_) throw std::logic_error("BS event earlier than the previous one");
    last_ = now;
    StepResult r;
    r.state_before = r.state_after = to_string(BsState::WaitMsg1);
    std::visit(overloaded{
                   [&](const Trigger&) { r.ignored = true; },
                   [&](const TimerEvent& t) {
                       const auto idx = static_cast<std::size_t>(t.key);
                       switch (static_cast<TimerKind>(t.kind)) {
                       case RaoEnd: on_rao_end(now, TimeStamp(t.key), r); break;
                       case SendRar: send_rar(now, idx, r); break;
                       case Msg3Check: check_msg3(now, idx, t.arg, r); break;
                       case SendMsg4: send_msg4(now, idx, r); break;
                       case Msg4AckCheck: check_msg4_ack(now, idx, t.arg, r); break;
                       default: throw std::logic_error("unknown BS timer");
                       }
                   },
                   [&](const Delivered& d) {
                       r.event = "rx " + describe(d.msg);
                       std::visit(overloaded{
                                      [&](const Msg1& m) { on_msg1(now, m, d.msg.tags, r); },
                                      [&](const Msg3& m) { on_msg3(now, m, d.msg.tags, r); },
                                      [&](const Harq& h) { on_harq(now, h, r); },
                                      [&](const auto&) { r.detail = "unexpected downlink message on uplink"; },
                                  },
                                  d.msg.body);
                   },
               },
               in);
    return r;
}

void BsMachine::on_msg1(TimeStamp now, const Msg1& m, const std::vector<Tag>& tags, StepResult& r)
{
    if (m.preamble_index < 0 || m.preamble_index > 63) {
        r.detail = "malformed preamble index";
        return;
    }
    const auto s = now.sf_floor();
    const auto toa = now - s;
    if (!raconfig::rao_matches(hooks_.monitored, s)) {
        r.detail = "no RAO monitored at " + ms(s) + ", preamble lost";
        return;
    }
    if (toa > cp_) {
        r.detail = "ToA " + std::to_string(toa.count()) + " exceeds CP " + std::to_string(cp_.count()) + ", preamble lost";
        return;
    }
    auto& bucket = rao_buckets_[s.samples()];
    if (bucket.empty()) r.actions.push_back(arm(RaoEnd, s + Duration::sf(1), s.samples()));
    for (const auto& t : tags) bucket.push_back({m.preamble_index, toa, t});
    r.detail = "preamble in RAO " + ms(s) + " toa=" + std::to_string(toa.count());
}

void BsMachine::on_rao_end(TimeStamp now, TimeStamp rao, StepResult& r)
{
    r.event = "rao_end " + ms(rao);
    auto node = rao_buckets_.extract(rao.samples());
    if (node.empty()) {
        r.ignored = true;
        return;
    }
    std::map<int, std::vector<Detection>> by_preamble;
    for (const auto& d : node.mapped()) by_preamble[d.preamble].push_back(d);
    const auto& c = cfg_.common;
    for (const auto& [preamble, dets] : by_preamble) {
        if (dets.size() > 1) ++collisions_;
        if (dets.size() > 1 && cfg_.collision == CollisionModel::DropBoth) {
            for (const auto& d : dets) r.actions.push_back(Observe{d.tag, Marker::Msg1Collided});
            r.detail += "preamble " + std::to_string(preamble) + " collided; ";
            continue;
        }
        BsAttempt a;
        a.state = BsState::GenerateMsg2;
        a.preamble = preamble;
        a.tac = static_cast<int>(std::min<std::int64_t>(c.max_tac, dets.front().toa.count() / timing::kTacStepSamples));
        a.temp_c_rnti = next_temp_++;
        a.rao_start = rao;
        a.contention_free = c.dedicated_preambles.count(preamble) > 0;
        for (const auto& d : dets) {
            a.tags.push_back(d.tag);
            r.actions.push_back(Observe{d.tag, Marker::Msg1Detected});
        }
        const auto ready = rao + c.processing;
        const auto hold = rao + (c.processing + hooks_.rar_hold - hooks_.rao_delay);
        const auto send_at = std::max(ready, hold).sf_ceil();
        attempts_.push_back(a);
        r.actions.push_back(arm(SendRar, send_at, static_cast<std::int64_t>(attempts_.size() - 1)));
        r.detail += "preamble " + std::to_string(preamble) + " detected tac=" + std::to_string(a.tac) + " RAR at " + ms(send_at) +
                    "; ";
    }
    (void)now;
}

void BsMachine::send_rar(TimeStamp now, std::size_t idx, StepResult& r)
{
    auto& a = attempts_.at(idx);
    r.event = "send_rar";
    r.state_before = to_string(a.state);
    if (a.state != BsState::GenerateMsg2) {
        r.ignored = true;
        return;
    }
    const auto& c = cfg_.common;
    const int raw = identity::raw_t_id(c.standard, c.mu, a.rao_start);
    const int tid = identity::corrected_t_id(raw, hooks_.tid_correction, tid_units(c.standard, c.mu));
    const auto rnti = identity::ra_rnti_for(c.standard, tid, c.rnti);
    RaMessage msg{Msg2{rnti, a.preamble, a.tac, raconfig::Msg3Grant{c.msg3_offset_sf, 0, 0}, a.temp_c_rnti}, a.tags};
    r.detail = describe(msg) + " t_id=" + std::to_string(tid) + " for " + tags_str(a.tags);
    r.actions.push_back(Transmit{std::move(msg)});
    if (a.contention_free) {
        a.state = BsState::Done;
    } else {
        a.grant_sf = now + Duration::sf(c.msg3_offset_sf);
        a.expect_sf = a.grant_sf + hooks_.sched_shift;
        a.msg3_tx = 0;
        a.state = BsState::WaitMsg3;
        r.actions.push_back(arm(Msg3Check, a.expect_sf + c.processing, static_cast<std::int64_t>(idx), 0));
        r.detail += ", expecting Msg3 at " + ms(a.expect_sf);
    }
    r.state_after = to_string(a.state);
}

void BsMachine::on_msg3(TimeStamp now, const Msg3& m, const std::vector<Tag>& tags, StepResult& r)
{
    auto* a = find_by_rnti(m.temp_c_rnti, BsState::WaitMsg3);
    if (!a) {
        r.detail = "no open grant for this Msg3";
        for (const auto& t : tags) r.actions.push_back(Observe{t, Marker::Msg3SchedMiss});
        return;
    }
    r.state_before = r.state_after = to_string(a->state);
    if (now.sf_floor() != a->expect_sf || m.harq_tx != a->msg3_tx) {
        for (const auto& t : tags) r.actions.push_back(Observe{t, Marker::Msg3SchedMiss});
        r.detail = "Msg3 in " + ms(now.sf_floor()) + " but reserved " + ms(a->expect_sf) + ", dropped";
        return;
    }
    if (a->msg3_decoded) {
        for (const auto& t : tags) r.actions.push_back(Observe{t, Marker::ContentionLost});
        r.detail = "second Msg3 on the same grant, dropped";
        return;
    }
    const int assumed = mod10(a->expect_sf.sf() + hooks_.seq_sf_shift);
    if (!sequences::sequences_match(m.ue_sf_used, assumed, seq_params(a->temp_c_rnti))) {
        for (const auto& t : tags) r.actions.push_back(Observe{t, Marker::Msg3DecodeFail});
        r.detail = "descrambling with SF " + std::to_string(assumed) + " but UE used SF " + std::to_string(m.ue_sf_used) +
                   ", decode failed";
        return;
    }
    a->msg3_decoded = true;
    a->decoded_c_rnti = m.c_rnti;
    a->decoded_tag = tags.empty() ? Tag{} : tags.front();
    for (const auto& t : tags) r.actions.push_back(Observe{t, Marker::Msg3Decoded});
    r.detail = "Msg3 decoded, id " + std::to_string(m.c_rnti);
}

void BsMachine::check_msg3(TimeStamp now, std::size_t idx, int n, StepResult& r)
{
    auto& a = attempts_.at(idx);
    r.event = "msg3_harq";
    r.state_before = to_string(a.state);
    if (a.state != BsState::WaitMsg3 || a.msg3_tx != n) {
        r.ignored = true;
        return;
    }
    const auto& c = cfg_.common;
    if (a.msg3_decoded) {
        r.actions.push_back(Transmit{RaMessage{Harq{true, a.temp_c_rnti}, {a.decoded_tag}}});
        a.state = BsState::GenerateMsg4;
        const auto send_at = std::max(now, a.grant_sf + c.processing + hooks_.cr_hold).sf_ceil();
        r.detail = "ACK Msg3, Msg4 at " + ms(send_at);
        r.state_after = to_string(a.state);
        if (send_at == now)
            send_msg4(now, idx, r);
        else
            r.actions.push_back(arm(SendMsg4, send_at, static_cast<std::int64_t>(idx)));
        return;
    }
    r.actions.push_back(Transmit{RaMessage{Harq{false, a.temp_c_rnti}, a.tags}});
    if (n + 1 < c.max_msg3_tx) {
        a.msg3_tx = n + 1;
        a.grant_sf = now + Duration::sf(c.harq_retx_offset_sf);
        a.expect_sf = a.grant_sf + hooks_.sched_shift;
        r.actions.push_back(arm(Msg3Check, a.expect_sf + c.processing, static_cast<std::int64_t>(idx), n + 1));
        r.detail = "NACK Msg3, retransmission expected at " + ms(a.expect_sf);
    } else {
        a.state = BsState::Done;
        r.detail = "NACK Msg3, giving up after " + std::to_string(n + 1) + " transmissions";
    }
    r.state_after = to_string(a.state);
}

void BsMachine::send_msg4(TimeStamp now, std::size_t idx, StepResult& r)
{
    auto& a = attempts_.at(idx);
    if (r.event.empty()) {
        r.event = "send_msg4";
        r.state_before = to_string(a.state);
    }
    if (a.state != BsState::GenerateMsg4) {
        r.ignored = true;
        return;
    }
    const auto& c = cfg_.common;
    const auto m4 = contention_resolution(Msg3{a.temp_c_rnti, a.decoded_c_rnti, 0, 0});
    r.actions.push_back(Transmit{RaMessage{m4, {a.decoded_tag}}});
    ++a.msg4_tx;
    a.msg4_acked = false;
    a.msg4_expect_ack = now + Duration::sf(c.harq_retx_offset_sf) + hooks_.sched_shift;
    r.actions.push_back(arm(Msg4AckCheck, a.msg4_expect_ack + c.processing, static_cast<std::int64_t>(idx), a.msg4_tx));
    r.detail += (r.detail.empty() ? "" : "; ") + std::string("Msg4 #") + std::to_string(a.msg4_tx) + " echo " +
                std::to_string(a.decoded_c_rnti) + ", ACK expected at " + ms(a.msg4_expect_ack);
    r.state_after = to_string(a.state);
}

void BsMachine::on_harq(TimeStamp now, const Harq& h, StepResult& r)
{
    auto* a = find_by_rnti(h.temp_c_rnti, BsState::GenerateMsg4);
    if (!a || !h.ack) {
        r.detail = "no Msg4 awaiting feedback";
        return;
    }
    r.state_before = r.state_after = to_string(a->state);
    if (now.sf_floor() != a->msg4_expect_ack) {
        r.detail = "HARQ feedback in " + ms(now.sf_floor()) + " but expected " + ms(a->msg4_expect_ack);
        return;
    }
    a->msg4_acked = true;
    r.detail = "Msg4 acknowledged";
}

void BsMachine::check_msg4_ack(TimeStamp now, std::size_t idx, int m, StepResult& r)
{
    auto& a = attempts_.at(idx);
    r.event = "msg4_harq";
    r.state_before = to_string(a.state);
    if (a.state != BsState::GenerateMsg4 || a.msg4_tx != m) {
        r.ignored = true;
        return;
    }
    if (a.msg4_acked) {
        a.state = BsState::Done;
        r.detail = "RA complete for " + tags_str({a.decoded_tag});
    } else if (a.msg4_tx < cfg_.max_msg4_tx) {
        r.detail = "no ACK for Msg4";
        send_msg4(now, idx, r);
    } else {
        a.state = BsState::Done;
        r.detail = "Msg4 never acknowledged";
    }
    r.state_after = to_string(a.state);
}

}  // namespace ntnra::protocol
