#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ntnra/protocol.hpp"
#include "ntnra/raconfig.hpp"
#include "ntnra/timing.hpp"

namespace ntnra::engine {

using protocol::Stage;
using timing::Duration;
using timing::TimeStamp;

struct Scenario {
    Standard standard = Standard::LTE;
    int prach_index = 3;
    int mu = 0;
    std::optional<int> preamble_format;
    std::optional<raconfig::PrachConfig> prach;  // replaces the built-in row when set
    protocol::CorrectionStrategy strategy = protocol::CorrectionStrategy::ta();

    Duration rtt{0};
    std::optional<Duration> cell_rtt;  // BS deployment value, defaults to rtt
    Duration gnss_error{0};            // added to the UE's RTT estimate

    int n_ues = 1;
    std::uint64_t seed = 1;
    Duration max_sim_time = Duration::ms(5000);

    std::optional<raconfig::ReportedTimers> reported;
    Duration pdcch_period = raconfig::kDefaultPdcchPeriod;
    Duration processing = Duration::ms(4);
    int msg3_offset_sf = 4;
    Duration backoff_max = Duration::ms(20);
    int max_msg3_tx = 5;
    int max_msg4_tx = 4;
    int max_tac = timing::kDefaultMaxTac;
    std::optional<int> forced_preamble;
    bool contention_free = false;
    protocol::CollisionModel collision = protocol::CollisionModel::DropBoth;
    bool record_trace = true;

    // throws std::invalid_argument
    void validate() const;
    raconfig::PrachConfig prach_config() const;
};

struct TraceRecord {
    TimeStamp time;
    std::string side;
    std::string state_before;
    std::string event;
    std::string state_after;
    std::string detail;
};

struct UeKpi {
    int ue = 0;
    std::optional<Duration> access_time;  // first Msg1 to Msg4 acceptance
    Stage furthest_stage = Stage::Msg1Undetected;
    int retries = 0;
    int collisions = 0;
    int attempts = 0;
};

struct KpiReport {
    Duration rtt;
    std::string strategy;
    std::vector<UeKpi> ues;
    int collision_count = 0;
    std::vector<TraceRecord> trace;
    TimeStamp end_time;
    std::uint64_t events = 0;

    bool all_connected() const;
    std::optional<double> mean_access_ms() const;
};

// markers seen for one attempt, folded into how far it got
Stage fold_markers(const std::set<protocol::Marker>& markers);

KpiReport run(const Scenario& s);
// same as run but insists on several UEs
KpiReport multi_ue_run(const Scenario& s);

struct CurvePoint {
    Duration rtt;
    std::string strategy;
    std::optional<Duration> access_time;
    int retries = 0;
    Stage furthest_stage = Stage::Msg1Undetected;
};

std::vector<CurvePoint> sweep_rtt(const Scenario& base, const std::vector<Duration>& rtts,
                                  const std::vector<protocol::CorrectionStrategy>& strategies);

struct LadderStep {
    protocol::FixFlags flags;
    Stage stage = Stage::Msg1Undetected;
    std::optional<Duration> access_time;
};

// {} -> {rao} -> {rao,rnti} -> {rao,rnti,sched} -> all
std::vector<protocol::FixFlags> ladder_flags();
std::vector<LadderStep> run_ladder(const Scenario& base);
bool strictly_progresses(const std::vector<LadderStep>& steps);

std::string kpi_csv_header();
std::string kpi_csv_row(const CurvePoint& p);
std::string kpi_csv(const KpiReport& r);
std::string kpi_csv(const std::vector<CurvePoint>& points);
std::string trace_csv(const KpiReport& r);
std::string format_ms(Duration d);

}  // namespace ntnra::engine
