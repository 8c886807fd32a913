#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ntnra/cli.hpp"

using namespace ntnra;
using namespace ntnra::cli;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(NTNRA_SCENARIO_DIR) + "/" + name; }

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("ntnra_cli_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("scenario parsing")
{
    const auto f = parse_scenario(
        "[system]\nstandard = NR\nprach_index = 2\nmu = 1\n"
        "[ntn]\nrtt_ms = 12.5  # comment\n"
        "[strategy]\nmode = sf_td\nfix_flags = rao,rnti\n"
        "[sim]\nseed = 9\nn_ues = 3\nmax_time_ms = 900\n"
        "[sweep]\nrtt_ms = 4, 8\nstrategies = TA\n");
    CHECK(f.scenario.standard == Standard::NR);
    CHECK(f.scenario.prach_index == 2);
    CHECK(f.scenario.mu == 1);
    CHECK(f.scenario.rtt == timing::Duration::from_ms(12.5));
    CHECK(f.scenario.strategy.mode == protocol::CorrectionMode::SfLevelTD);
    CHECK(f.scenario.strategy.fix == protocol::FixFlags{true, true, false, false});
    CHECK(f.scenario.strategy.timer_mode == raconfig::TimerMode::BsExtended);
    CHECK(f.scenario.seed == 9);
    CHECK(f.scenario.n_ues == 3);
    CHECK(f.sweep.present);
    CHECK(f.sweep.rtts.size() == 2);
    CHECK(f.sweep.strategies.size() == 1);
    CHECK_FALSE(f.geometry);
}

TEST_CASE("altitude sets the RTT from the geometry")
{
    const auto f = parse_scenario("[ntn]\naltitude_km = 600\n");
    REQUIRE(f.geometry);
    CHECK(f.scenario.rtt.millis() == doctest::Approx(4.0).epsilon(0.01));
    const auto g = parse_scenario("[ntn]\naltitude_km = 35793\npayload = transparent\n");
    CHECK(g.scenario.rtt.millis() == doctest::Approx(477.57).epsilon(1e-4));
}

TEST_CASE("parse errors carry the line")
{
    auto line_of = [](const std::string& text) {
        try {
            parse_scenario(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return -1;
    };
    CHECK(line_of("[ntn]\nrtt_ms = 4\nwhatever = 1\n") == 3);
    CHECK(line_of("[ntn]\nrtt_ms = 4\n[bogus]\n") == 3);
    CHECK(line_of("[ntn]\nrtt_ms = 4\naltitude_km = 600\n") == 3);
    CHECK(line_of("[ntn]\nrtt_ms = 4\nrtt_ms = 5\n") == 3);
    CHECK(line_of("[ntn]\nrtt_ms = four\n") == 2);
    CHECK(line_of("[system]\nstandard = GSM\n[ntn]\nrtt_ms = 1\n") == 2);
    CHECK(line_of("rtt_ms = 4\n") == 1);
    CHECK(line_of("[ntn\n") == 1);
    CHECK(line_of("[system]\nmu = 0\n") > 0);
    CHECK(line_of("[ntn]\nrtt_ms = 4\n") == -1);
}

TEST_CASE("PRACH table path is resolved next to the scenario")
{
    const auto f = load_scenario(fixture("custom_table.ini"));
    REQUIRE(f.scenario.prach);
    CHECK(f.scenario.prach->index() == 7);
}

TEST_CASE("run command exit codes")
{
    std::ostringstream out, err;
    Options opt;
    CHECK(cmd_run(fixture("baseline.ini"), "", opt, out, err) == kOk);
    CHECK(out.str().find("0.000000,none,12.000000,0,Connected") != std::string::npos);
    out.str("");
    CHECK(cmd_run(fixture("geo_ta.ini"), "", opt, out, err) == kOk);
    CHECK(cmd_run(fixture("leo_none.ini"), "", opt, out, err) == kProtocolFailure);
    CHECK(err.str().find("Msg1-undetected") != std::string::npos);
    CHECK(cmd_run(fixture("malformed.ini"), "", opt, out, err) == kConfigError);
    CHECK(cmd_run(fixture("does_not_exist.ini"), "", opt, out, err) == kConfigError);
}

TEST_CASE("output files honour the output directory variable")
{
    TempDir tmp;
    setenv(kOutputDirEnv, tmp.path.c_str(), 1);
    std::ostringstream out, err;
    Options opt;
    opt.trace = true;
    REQUIRE(cmd_run(fixture("geo_ta.ini"), "geo.csv", opt, out, err) == kOk);
    CHECK(fs::exists(tmp.path / "geo.csv"));
    CHECK(fs::exists(tmp.path / "geo.trace.csv"));
    const auto first = slurp(tmp.path / "geo.csv");
    const auto first_trace = slurp(tmp.path / "geo.trace.csv");
    REQUIRE(cmd_run(fixture("geo_ta.ini"), "geo.csv", opt, out, err) == kOk);
    CHECK(slurp(tmp.path / "geo.csv") == first);
    CHECK(slurp(tmp.path / "geo.trace.csv") == first_trace);
    unsetenv(kOutputDirEnv);
    CHECK(resolve_output("x.csv") == "x.csv");
}

TEST_CASE("sweep command")
{
    TempDir tmp;
    std::ostringstream out, err;
    Options opt;
    opt.gnuplot = true;
    const auto csv = (tmp.path / "access.csv").string();
    REQUIRE(cmd_sweep(fixture("sweep_access.ini"), csv, opt, out, err) == kOk);
    const auto text = slurp(csv);
    CHECK(text.rfind("rtt_ms,strategy,access_time_ms,retries,furthest_stage\n", 0) == 0);
    CHECK(fs::exists(tmp.path / "access.gp"));

    const auto cov = (tmp.path / "coverage.csv").string();
    REQUIRE(cmd_sweep(fixture("coverage_600.ini"), cov, opt, out, err) == kOk);
    CHECK(slurp(cov).rfind("alpha_cen_deg,format,radius_km\n", 0) == 0);

    CHECK(cmd_sweep(fixture("sweep_empty.ini"), "", Options{}, out, err) == kConfigError);
    Options o2;
    o2.rtt_list = "4,25";
    std::ostringstream o;
    CHECK(cmd_sweep(fixture("sweep_access.ini"), "", o2, o, err) == kOk);
    CHECK(o.str().find("25.000000,TD") != std::string::npos);
}

TEST_CASE("ladder command")
{
    std::ostringstream out, err;
    CHECK(cmd_ladder(fixture("ladder_4ms.ini"), Options{}, out, err) == kOk);
    CHECK(out.str().find("step 5 fixes=rao+rnti+sched+seq stage=Connected") != std::string::npos);
    CHECK(cmd_ladder(fixture("ladder_zero.ini"), Options{}, out, err) == kOk);
    CHECK(cmd_ladder(fixture("malformed.ini"), Options{}, out, err) == kConfigError);
}

TEST_CASE("coverage CSV")
{
    CHECK(coverage_csv({{45.0, 1, 12.5, 40, 50}}) == "alpha_cen_deg,format,radius_km\n45.000000,1,12.500000\n");
}
