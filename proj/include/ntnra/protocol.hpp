#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ntnra/identity.hpp"
#include "ntnra/raconfig.hpp"
#include "ntnra/sequences.hpp"
#include "ntnra/timing.hpp"

namespace ntnra::protocol {

using timing::Duration;
using timing::TimeStamp;

enum class CorrectionMode { NoCorrection, SampleTaOnly, SfLevelTA, SfLevelTD };

struct FixFlags {
    bool rao = false;
    bool rnti = false;
    bool sched = false;
    bool seq = false;
    bool operator==(const FixFlags&) const = default;

    static FixFlags all() { return {true, true, true, true}; }
};

struct CorrectionStrategy {
    CorrectionMode mode = CorrectionMode::NoCorrection;
    FixFlags fix;
    raconfig::TimerMode timer_mode = raconfig::TimerMode::UeAdapted;

    static CorrectionStrategy none();
    static CorrectionStrategy sample_ta();
    static CorrectionStrategy ta();
    static CorrectionStrategy td();
};

std::string to_string(CorrectionMode m);
CorrectionMode mode_from_string(const std::string& s);
// "TA", "TD", "none" or "sample_ta"
std::string strategy_label(const CorrectionStrategy& s);
// accepts the labels above
CorrectionStrategy strategy_from_label(const std::string& s);
std::string to_string(const FixFlags& f);
// comma or '+' separated subset of rao, rnti, sched, seq; "none" or "" for no fixes, "all" for every fix
FixFlags fix_flags_from_string(const std::string& s);

enum class UeState { Idle, GenerateMsg1, WaitMsg2, GenerateMsg3, WaitMsg4, Connected };
enum class BsState { WaitMsg1, GenerateMsg2, WaitMsg3, GenerateMsg4, Done };

// ordered from least to most progress
enum class Stage { Msg1Undetected, Msg2Timeout, Msg2Withdrawn, Msg3SchedMiss, Msg3DecodeFail, Msg4Failed, Connected };

std::string to_string(UeState s);
std::string to_string(BsState s);
std::string to_string(Stage s);

// Simulation bookkeeping carried beside a message; protocol decisions never read it.
struct Tag {
    int ue = -1;
    int attempt = -1;
    bool operator==(const Tag&) const = default;
};

struct Msg1 {
    int preamble_index = 0;
    TimeStamp tx_local;
};
struct Msg2 {
    identity::RaRnti ra_rnti;
    int preamble_index = 0;
    int tac = 0;
    raconfig::Msg3Grant grant;
    int temp_c_rnti = 0;
};
struct Msg3 {
    int temp_c_rnti = 0;  // addressing
    int c_rnti = 0;       // contention resolution identity
    int ue_sf_used = 0;
    int harq_tx = 0;
};
struct Msg4 {
    int temp_c_rnti = 0;
    int echoed_c_rnti = 0;
};
struct Harq {
    bool ack = false;
    int temp_c_rnti = 0;
};

struct RaMessage {
    std::variant<Msg1, Msg2, Msg3, Msg4, Harq> body;
    std::vector<Tag> tags;
};

std::string describe(const RaMessage& m);

// what the simulation learns about an attempt; folded into a Stage by the engine
enum class Marker {
    Msg1Sent,
    Msg1Detected,
    Msg1Collided,
    RarWithdrawn,
    RarLate,
    RarAccepted,
    Msg3SchedMiss,
    Msg3DecodeFail,
    Msg3Decoded,
    ContentionLost,
    Connected,
};
std::string to_string(Marker m);

struct TimerEvent {
    int kind = 0;
    std::int64_t key = 0;
    int arg = 0;
    std::uint64_t token = 0;
};

struct Transmit {
    RaMessage msg;
};
struct SetTimer {
    TimeStamp at;  // on the owner's clock
    TimerEvent timer;
};
struct Observe {
    Tag who;
    Marker marker;
};
using Action = std::variant<Transmit, SetTimer, Observe>;

struct StepResult {
    std::vector<Action> actions;
    std::string state_before;
    std::string event;
    std::string state_after;
    std::string detail;
    bool ignored = false;  // stale timer, nothing to record
};

struct Trigger {};
struct Delivered {
    RaMessage msg;
};
using Input = std::variant<Trigger, TimerEvent, Delivered>;

// Inputs shared by both ends when wiring a strategy.
struct StrategyInputs {
    Standard standard = Standard::LTE;
    int mu = 0;
    raconfig::PrachConfig prach = raconfig::builtin_prach(Standard::LTE, 3);
    raconfig::TimerSet timers = raconfig::standard_timers(Standard::LTE);
    std::optional<raconfig::ReportedTimers> reported;  // defaults to the largest standard values
    Duration ue_rtt_estimate{0};
    std::optional<Duration> cell_rtt;  // deployment constant, known to the BS
    int max_tac = timing::kDefaultMaxTac;
};

struct UeHooks {
    raconfig::PrachConfig tx_prach = raconfig::builtin_prach(Standard::LTE, 3);
    Duration msg1_advance{0};   // transmit this much before the RAO start
    Duration anchor_shift{0};   // tx RAO start + anchor_shift = nominal RAO on the UE clock
    identity::TidCorrection tid_correction;
    int seq_sf_shift = 0;
    Duration own_sample_ta{0};  // kept on uplink after Msg1, on top of the TAC
    std::optional<Duration> total_ta_cap;
    Duration rar_open_delay{0};
    Duration rar_len{0};
    Duration cr_open_delay{0};
    Duration cr_len{0};
};

struct BsHooks {
    raconfig::PrachConfig monitored = raconfig::builtin_prach(Standard::LTE, 3);
    Duration rao_delay{0};      // detected RAO - rao_delay = UE's nominal RAO
    identity::TidCorrection tid_correction;
    Duration sched_shift{0};    // expected Msg3 / HARQ arrival after the granted SF
    int seq_sf_shift = 0;
    Duration rar_hold{0};       // extension the UE will wait before opening its window
    Duration cr_hold{0};
};

// throws std::invalid_argument on inconsistent settings (e.g. TD without a cell RTT)
UeHooks apply_strategy_ue(const CorrectionStrategy& s, const StrategyInputs& in);
BsHooks apply_strategy_bs(const CorrectionStrategy& s, const StrategyInputs& in);
void validate(const CorrectionStrategy& s, const StrategyInputs& in);

struct Common {
    Standard standard = Standard::LTE;
    int mu = 0;
    Duration processing = Duration::ms(4);
    int msg3_offset_sf = 4;
    int harq_retx_offset_sf = 4;
    int max_msg3_tx = 5;
    int max_tac = timing::kDefaultMaxTac;
    identity::RntiIndices rnti;
    int cell_id = 0;
    sequences::DmrsParams dmrs;
    std::set<int> dedicated_preambles;  // contention-free pool
};

struct UeConfig {
    int ue_id = 0;
    Common common;
    Duration backoff_max = Duration::ms(20);
    int preamble_pool = 64;
    std::optional<int> forced_preamble;     // first attempt only
    std::optional<int> dedicated_preamble;  // contention-free access
    std::uint64_t seed = 1;
};

class UeMachine {
public:
    enum TimerKind { RaoTick, RarWindowEnd, Msg3Tx, CrWindowEnd, HarqAckTx, kTimerKinds };

    UeMachine(UeConfig cfg, UeHooks hooks);

    // now is on the UE clock and must not go backwards
    StepResult step(TimeStamp now, const Input& in);

    UeState state() const { return state_; }
    int preamble_index() const { return preamble_; }
    std::optional<identity::RaRnti> ra_rnti() const { return ra_rnti_; }
    int temp_c_rnti() const { return temp_c_rnti_; }
    int c_rnti() const { return c_rnti_; }
    int retry_count() const { return retry_count_; }
    int power_ramp_level() const { return power_ramp_; }
    int attempt() const { return attempt_; }
    std::optional<TimeStamp> backoff_deadline() const { return backoff_deadline_; }
    std::optional<TimeStamp> first_msg1() const { return first_msg1_; }
    std::optional<TimeStamp> connected_at() const { return connected_at_; }
    const UeHooks& hooks() const { return hooks_; }

private:
    Tag tag() const { return {cfg_.ue_id, attempt_}; }
    SetTimer arm(TimerKind k, TimeStamp at, int arg = 0);
    void schedule_msg1(TimeStamp now, StepResult& r);
    void retry(TimeStamp now, StepResult& r, const std::string& why);
    Duration ul_ta() const;
    void on_timer(TimeStamp now, const TimerEvent& t, StepResult& r);
    void on_delivery(TimeStamp now, const RaMessage& m, StepResult& r);

    UeConfig cfg_;
    UeHooks hooks_;
    std::mt19937_64 rng_;
    UeState state_ = UeState::Idle;
    std::array<std::uint64_t, kTimerKinds> gen_{};
    std::optional<TimeStamp> last_;

    int attempt_ = -1;
    int preamble_ = 0;
    std::optional<identity::RaRnti> ra_rnti_;
    TimeStamp tx_rao_;
    TimeStamp anchor_;
    TimeStamp rar_open_;
    TimeStamp rar_close_;
    int tac_ = 0;
    int temp_c_rnti_ = 0;
    int c_rnti_ = 0;
    TimeStamp msg3_label_;
    int msg3_tx_ = 0;
    TimeStamp cr_open_;
    TimeStamp cr_close_;
    int retry_count_ = 0;
    int power_ramp_ = 0;
    std::optional<TimeStamp> backoff_deadline_;
    std::optional<TimeStamp> first_msg1_;
    std::optional<TimeStamp> connected_at_;
};

enum class CollisionModel { DropBoth, ResolveAtMsg3 };
std::string to_string(CollisionModel m);
CollisionModel collision_model_from_string(const std::string& s);

struct BsConfig {
    Common common;
    int max_msg4_tx = 4;
    CollisionModel collision = CollisionModel::DropBoth;
    int first_temp_c_rnti = 0x100;
};

struct BsAttempt {
    BsState state = BsState::WaitMsg1;
    int preamble = 0;
    int tac = 0;
    int temp_c_rnti = 0;
    TimeStamp rao_start;
    std::vector<Tag> tags;
    TimeStamp grant_sf;
    TimeStamp expect_sf;
    int msg3_tx = 0;
    bool msg3_decoded = false;
    int decoded_c_rnti = 0;
    Tag decoded_tag;
    int msg4_tx = 0;
    TimeStamp msg4_expect_ack;
    bool msg4_acked = false;
    bool contention_free = false;
};

class BsMachine {
public:
    enum TimerKind { RaoEnd, SendRar, Msg3Check, SendMsg4, Msg4AckCheck };

    BsMachine(BsConfig cfg, BsHooks hooks);

    StepResult step(TimeStamp now, const Input& in);

    // no attempt in flight and nothing buffered
    bool idle() const;
    const std::vector<BsAttempt>& attempts() const { return attempts_; }
    const BsHooks& hooks() const { return hooks_; }
    Duration cp() const { return cp_; }
    int collisions() const { return collisions_; }

    // Msg4 for an accepted Msg3
    static Msg4 contention_resolution(const Msg3& msg3);

private:
    struct Detection {
        int preamble;
        Duration toa;
        Tag tag;
    };

    void on_msg1(TimeStamp now, const Msg1& m, const std::vector<Tag>& tags, StepResult& r);
    void on_msg3(TimeStamp now, const Msg3& m, const std::vector<Tag>& tags, StepResult& r);
    void on_harq(TimeStamp now, const Harq& h, StepResult& r);
    void on_rao_end(TimeStamp now, TimeStamp rao, StepResult& r);
    void send_rar(TimeStamp now, std::size_t idx, StepResult& r);
    void check_msg3(TimeStamp now, std::size_t idx, int n, StepResult& r);
    void send_msg4(TimeStamp now, std::size_t idx, StepResult& r);
    void check_msg4_ack(TimeStamp now, std::size_t idx, int m, StepResult& r);
    BsAttempt* find_by_rnti(int temp_c_rnti, BsState state);
    static SetTimer arm(TimerKind k, TimeStamp at, std::int64_t key, int arg = 0);
    sequences::SequenceParams seq_params(int temp_c_rnti) const;

    BsConfig cfg_;
    BsHooks hooks_;
    Duration cp_;
    std::map<std::int64_t, std::vector<Detection>> rao_buckets_;
    std::vector<BsAttempt> attempts_;
    int next_temp_ = 0;
    int collisions_ = 0;
    std::optional<TimeStamp> last_;
};

}  // namespace ntnra::protocol
