#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntnra/engine.hpp"
#include "ntnra/geometry.hpp"

namespace ntnra::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kProtocolFailure = 2, kInvariantViolation = 3 };

inline constexpr const char* kOutputDirEnv = "NTNRA_OUTPUT_DIR";

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line)
    {
    }
    int line() const { return line_; }

private:
    int line_;
};

enum class SweepKind { Access, Coverage };

struct SweepSpec {
    bool present = false;
    SweepKind kind = SweepKind::Access;
    std::vector<timing::Duration> rtts;
    std::vector<double> altitudes_km;
    std::vector<protocol::CorrectionStrategy> strategies;
    std::vector<int> formats{0, 1, 2};
    double alpha_from_deg = 10.0;
    double alpha_to_deg = 90.0;
    double alpha_step_deg = 1.0;
};

struct ScenarioFile {
    engine::Scenario scenario;
    std::optional<geometry::NtnGeometry> geometry;  // set when the file gives an altitude
    SweepSpec sweep;
};

// throws ParseError for syntax, unknown keys and bad values
ScenarioFile parse_scenario(const std::string& text, const std::string& base_dir = ".");
ScenarioFile load_scenario(const std::string& path);

struct Options {
    std::optional<std::uint64_t> seed;
    bool trace = false;
    bool gnuplot = false;
    std::optional<std::string> rtt_list;  // comma separated ms, replaces the file's sweep list
};

// relative output paths land in $NTNRA_OUTPUT_DIR when it is set
std::string resolve_output(const std::string& path);

int cmd_run(const std::string& scenario_path, const std::string& output_path, const Options& opt, std::ostream& out,
            std::ostream& err);
int cmd_sweep(const std::string& scenario_path, const std::string& output_path, const Options& opt, std::ostream& out,
              std::ostream& err);
int cmd_ladder(const std::string& scenario_path, const Options& opt, std::ostream& out, std::ostream& err);

std::string coverage_csv(const std::vector<geometry::CoveragePoint>& points);

}  // namespace ntnra::cli
