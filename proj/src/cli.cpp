#include "ntnra/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace ntnra::cli {

namespace fs = std::filesystem;
using timing::Duration;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string tok;
    std::istringstream in(s);
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> s = {
        {"system", {"standard", "prach_index", "mu", "preamble_format", "prach_table", "pdcch_period_ms"}},
        {"ntn", {"altitude_km", "rtt_ms", "payload", "alpha_min", "alpha_max", "cell_rtt_ms", "gnss_error_ms"}},
        {"strategy", {"mode", "fix_flags", "timer_mode"}},
        {"sim",
         {"seed", "n_ues", "max_time_ms", "forced_preamble", "contention_free", "collision_model", "processing_ms",
          "backoff_max_ms", "max_tac", "msg3_offset_sf", "max_msg3_tx", "max_msg4_tx", "rar_window_ms", "cr_timer_ms"}},
        {"sweep", {"kind", "rtt_ms", "altitude_km", "strategies", "formats", "alpha_from", "alpha_to", "alpha_step"}},
    };
    return s;
}

struct Entry {
    std::string value;
    int line;
};

class Reader {
public:
    explicit Reader(std::map<std::string, Entry> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& k) const { return kv_.count(k) > 0; }
    int line(const std::string& k) const { return kv_.at(k).line; }
    const std::string& str(const std::string& k) const { return kv_.at(k).value; }

    template <typename F>
    auto with(const std::string& k, F f) const
    {
        try {
            return f(str(k));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(line(k), k + ": " + e.what());
        }
    }

    double num(const std::string& k) const
    {
        return with(k, [&](const std::string& v) {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("not a number '" + v + "'");
            return d;
        });
    }

    std::int64_t integer(const std::string& k) const
    {
        return with(k, [&](const std::string& v) {
            std::size_t used = 0;
            const long long d = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument("not an integer '" + v + "'");
            return static_cast<std::int64_t>(d);
        });
    }

    bool boolean(const std::string& k) const
    {
        return with(k, [&](const std::string& v) {
            if (v == "true" || v == "yes" || v == "1") return true;
            if (v == "false" || v == "no" || v == "0") return false;
            throw std::invalid_argument("not a boolean '" + v + "'");
        });
    }

    std::vector<double> numbers(const std::string& k) const
    {
        return with(k, [&](const std::string& v) {
            std::vector<double> out;
            for (const auto& t : split_list(v)) {
                std::size_t used = 0;
                out.push_back(std::stod(t, &used));
                if (used != t.size()) throw std::invalid_argument("not a number '" + t + "'");
            }
            return out;
        });
    }

private:
    std::map<std::string, Entry> kv_;
};

Duration ms_value(double v) { return Duration::from_ms(v); }

}  // namespace

ScenarioFile parse_scenario(const std::string& text, const std::string& base_dir)
{
    std::map<std::string, Entry> kv;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = raw;
        const auto c = line.find_first_of("#;");
        if (c != std::string::npos) line.erase(c);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!schema().count(section)) throw ParseError(lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
        if (section.empty()) throw ParseError(lineno, "key outside any section");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (!schema().at(section).count(key)) throw ParseError(lineno, "unknown key '" + key + "' in [" + section + "]");
        if (value.empty()) throw ParseError(lineno, "empty value for '" + key + "'");
        const auto full = section + "." + key;
        if (kv.count(full)) throw ParseError(lineno, "duplicate key '" + key + "'");
        kv[full] = {value, lineno};
    }

    const Reader r(kv);
    ScenarioFile f;
    auto& s = f.scenario;

    if (r.has("system.standard")) s.standard = r.with("system.standard", [](const std::string& v) { return standard_from_string(v); });
    if (r.has("system.prach_index")) s.prach_index = static_cast<int>(r.integer("system.prach_index"));
    if (r.has("system.mu")) s.mu = static_cast<int>(r.integer("system.mu"));
    if (r.has("system.preamble_format")) s.preamble_format = static_cast<int>(r.integer("system.preamble_format"));
    if (r.has("system.pdcch_period_ms")) s.pdcch_period = ms_value(r.num("system.pdcch_period_ms"));
    if (r.has("system.prach_table")) {
        s.prach = r.with("system.prach_table", [&](const std::string& v) {
            const auto path = fs::path(v).is_absolute() ? fs::path(v) : fs::path(base_dir) / v;
            const auto table = raconfig::load_prach_table(path.string());
            const auto* row = raconfig::find_prach(table, s.standard, s.prach_index);
            if (!row)
                throw std::invalid_argument("no row for " + to_string(s.standard) + " index " + std::to_string(s.prach_index));
            return *row;
        });
    }

    const bool has_alt = r.has("ntn.altitude_km");
    const bool has_rtt = r.has("ntn.rtt_ms");
    if (has_alt && has_rtt)
        throw ParseError(std::max(r.line("ntn.altitude_km"), r.line("ntn.rtt_ms")), "give altitude_km or rtt_ms, not both");
    if (!has_alt && !has_rtt) throw ParseError(lineno, "[ntn] needs altitude_km or rtt_ms");
    if (has_alt) {
        geometry::NtnGeometry g;
        g.h_s_km = r.num("ntn.altitude_km");
        if (r.has("ntn.payload")) g.payload = r.with("ntn.payload", [](const std::string& v) { return geometry::payload_from_string(v); });
        if (r.has("ntn.alpha_min")) g.alpha_min_deg = r.num("ntn.alpha_min");
        if (r.has("ntn.alpha_max")) g.alpha_max_deg = r.num("ntn.alpha_max");
        r.with("ntn.altitude_km", [&](const std::string&) {
            g.validate();
            return 0;
        });
        // the UE sits at the highest elevation of the cell, where the RTT is smallest
        s.rtt = geometry::rtt_at(g.alpha_max_deg, g);
        f.geometry = g;
    } else {
        s.rtt = ms_value(r.num("ntn.rtt_ms"));
        if (r.has("ntn.payload") || r.has("ntn.alpha_min") || r.has("ntn.alpha_max")) {
            const auto k = r.has("ntn.payload") ? "ntn.payload" : r.has("ntn.alpha_min") ? "ntn.alpha_min" : "ntn.alpha_max";
            throw ParseError(r.line(k), "geometry keys need altitude_km");
        }
    }
    if (r.has("ntn.cell_rtt_ms")) s.cell_rtt = ms_value(r.num("ntn.cell_rtt_ms"));
    if (r.has("ntn.gnss_error_ms")) s.gnss_error = ms_value(r.num("ntn.gnss_error_ms"));

    if (r.has("strategy.mode")) {
        const auto mode = r.with("strategy.mode", [](const std::string& v) { return protocol::mode_from_string(v); });
        switch (mode) {
        case protocol::CorrectionMode::SfLevelTA: s.strategy = protocol::CorrectionStrategy::ta(); break;
        case protocol::CorrectionMode::SfLevelTD: s.strategy = protocol::CorrectionStrategy::td(); break;
        case protocol::CorrectionMode::SampleTaOnly: s.strategy = protocol::CorrectionStrategy::sample_ta(); break;
        case protocol::CorrectionMode::NoCorrection: s.strategy = protocol::CorrectionStrategy::none(); break;
        }
    }
    if (r.has("strategy.fix_flags"))
        s.strategy.fix = r.with("strategy.fix_flags", [](const std::string& v) { return protocol::fix_flags_from_string(v); });
    if (r.has("strategy.timer_mode"))
        s.strategy.timer_mode = r.with("strategy.timer_mode", [](const std::string& v) { return raconfig::timer_mode_from_string(v); });

    if (r.has("sim.seed")) s.seed = static_cast<std::uint64_t>(r.integer("sim.seed"));
    if (r.has("sim.n_ues")) s.n_ues = static_cast<int>(r.integer("sim.n_ues"));
    if (r.has("sim.max_time_ms")) s.max_sim_time = ms_value(r.num("sim.max_time_ms"));
    if (r.has("sim.forced_preamble")) s.forced_preamble = static_cast<int>(r.integer("sim.forced_preamble"));
    if (r.has("sim.contention_free")) s.contention_free = r.boolean("sim.contention_free");
    if (r.has("sim.collision_model"))
        s.collision = r.with("sim.collision_model", [](const std::string& v) { return protocol::collision_model_from_string(v); });
    if (r.has("sim.processing_ms")) s.processing = ms_value(r.num("sim.processing_ms"));
    if (r.has("sim.backoff_max_ms")) s.backoff_max = ms_value(r.num("sim.backoff_max_ms"));
    if (r.has("sim.max_tac")) s.max_tac = static_cast<int>(r.integer("sim.max_tac"));
    if (r.has("sim.msg3_offset_sf")) s.msg3_offset_sf = static_cast<int>(r.integer("sim.msg3_offset_sf"));
    if (r.has("sim.max_msg3_tx")) s.max_msg3_tx = static_cast<int>(r.integer("sim.max_msg3_tx"));
    if (r.has("sim.max_msg4_tx")) s.max_msg4_tx = static_cast<int>(r.integer("sim.max_msg4_tx"));
    if (r.has("sim.rar_window_ms") || r.has("sim.cr_timer_ms")) {
        auto rep = raconfig::default_reported(raconfig::standard_timers(s.standard, s.mu, s.pdcch_period));
        if (r.has("sim.rar_window_ms")) rep.rar_window = ms_value(r.num("sim.rar_window_ms"));
        if (r.has("sim.cr_timer_ms")) rep.cr_timer = ms_value(r.num("sim.cr_timer_ms"));
        s.reported = rep;
    }

    auto& sw = f.sweep;
    for (const auto& [k, e] : kv)
        if (k.rfind("sweep.", 0) == 0) sw.present = true;
    if (r.has("sweep.kind")) {
        sw.kind = r.with("sweep.kind", [](const std::string& v) {
            if (v == "access") return SweepKind::Access;
            if (v == "coverage") return SweepKind::Coverage;
            throw std::invalid_argument("sweep kind is access or coverage");
        });
    }
    if (r.has("sweep.rtt_ms"))
        for (double v : r.numbers("sweep.rtt_ms")) sw.rtts.push_back(ms_value(v));
    if (r.has("sweep.altitude_km")) sw.altitudes_km = r.numbers("sweep.altitude_km");
    if (r.has("sweep.strategies")) {
        sw.strategies = r.with("sweep.strategies", [](const std::string& v) {
            std::vector<protocol::CorrectionStrategy> out;
            for (const auto& t : split_list(v)) out.push_back(protocol::strategy_from_label(t));
            return out;
        });
    } else {
        sw.strategies = {protocol::CorrectionStrategy::ta(), protocol::CorrectionStrategy::td()};
    }
    if (r.has("sweep.formats")) {
        sw.formats.clear();
        for (double v : r.numbers("sweep.formats")) sw.formats.push_back(static_cast<int>(v));
    }
    if (r.has("sweep.alpha_from")) sw.alpha_from_deg = r.num("sweep.alpha_from");
    if (r.has("sweep.alpha_to")) sw.alpha_to_deg = r.num("sweep.alpha_to");
    if (r.has("sweep.alpha_step")) sw.alpha_step_deg = r.num("sweep.alpha_step");

    try {
        s.validate();
    } catch (const std::exception& e) {
        throw ParseError(lineno, std::string("invalid scenario: ") + e.what());
    }
    return f;
}

ScenarioFile load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open scenario '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto dir = fs::path(path).parent_path();
    return parse_scenario(ss.str(), dir.empty() ? "." : dir.string());
}

std::string resolve_output(const std::string& path)
{
    const char* dir = std::getenv(kOutputDirEnv);
    if (!dir || !*dir || fs::path(path).is_absolute()) return path;
    return (fs::path(dir) / path).string();
}

namespace {

bool write_file(const std::string& path, const std::string& content, std::ostream& err)
{
    const auto p = fs::path(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream o(p, std::ios::binary);
    if (!o) {
        err << "cannot write " << path << "\n";
        return false;
    }
    o << content;
    return static_cast<bool>(o);
}

std::string sibling(const std::string& path, const std::string& suffix)
{
    auto p = fs::path(path);
    p.replace_extension();
    return p.string() + suffix;
}

// ParseError -> message and exit code 1
template <typename F>
int guarded(std::ostream& err, F f)
{
    try {
        return f();
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::domain_error& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::out_of_range& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::logic_error& e) {
        err << "invariant violated: " << e.what() << "\n";
        return kInvariantViolation;
    }
}

std::string gnuplot_access(const std::string& csv)
{
    return fmt::format(
        "set datafile separator ','\n"
        "set key left top\n"
        "set xlabel 'RTT [ms]'\nset ylabel 'access time [ms]'\n"
        "plot for [s in 'TA TD'] '{0}' using 1:(strcol(2) eq s ? $3 : 1/0) with linespoints title s\n",
        csv);
}

std::string gnuplot_coverage(const std::string& csv)
{
    return fmt::format(
        "set datafile separator ','\n"
        "set key left top\n"
        "set xlabel 'cell centre elevation [deg]'\nset ylabel 'cell radius [km]'\n"
        "plot for [f=0:2] '{0}' using 1:($2 == f ? $3 : 1/0) with lines title sprintf('format %d', f)\n",
        csv);
}

}  // namespace

std::string coverage_csv(const std::vector<geometry::CoveragePoint>& points)
{
    std::string out = "alpha_cen_deg,format,radius_km\n";
    for (const auto& p : points) out += fmt::format("{:.6f},{},{:.6f}\n", p.alpha_cen_deg, p.format, p.radius_km);
    return out;
}

int cmd_run(const std::string& scenario_path, const std::string& output_path, const Options& opt, std::ostream& out,
            std::ostream& err)
{
    return guarded(err, [&] {
        auto f = load_scenario(scenario_path);
        if (opt.seed) f.scenario.seed = *opt.seed;
        f.scenario.record_trace = opt.trace;
        const auto report = engine::run(f.scenario);
        const auto csv = engine::kpi_csv(report);
        if (output_path.empty()) {
            out << csv;
            if (opt.trace) out << "\n" << engine::trace_csv(report);
        } else {
            const auto path = resolve_output(output_path);
            if (!write_file(path, csv, err)) return static_cast<int>(kConfigError);
            if (opt.trace && !write_file(sibling(path, ".trace.csv"), engine::trace_csv(report), err))
                return static_cast<int>(kConfigError);
        }
        for (const auto& u : report.ues) {
            if (u.access_time)
                err << fmt::format("ue{}: connected after {} ms, {} retries\n", u.ue, engine::format_ms(*u.access_time), u.retries);
            else
                err << fmt::format("ue{}: not connected, furthest stage {} after {} attempts\n", u.ue,
                                   protocol::to_string(u.furthest_stage), u.attempts);
        }
        return static_cast<int>(report.all_connected() ? kOk : kProtocolFailure);
    });
}

int cmd_sweep(const std::string& scenario_path, const std::string& output_path, const Options& opt, std::ostream& out,
              std::ostream& err)
{
    return guarded(err, [&] {
        auto f = load_scenario(scenario_path);
        if (opt.seed) f.scenario.seed = *opt.seed;
        auto sw = f.sweep;
        if (opt.rtt_list) {
            sw.kind = SweepKind::Access;
            sw.rtts.clear();
            sw.altitudes_km.clear();
            for (const auto& t : split_list(*opt.rtt_list)) sw.rtts.push_back(Duration::from_ms(std::stod(t)));
            if (sw.rtts.empty()) throw std::invalid_argument("empty RTT list");
        }
        std::string csv;
        std::string script;
        if (sw.kind == SweepKind::Coverage) {
            if (!f.geometry) throw std::invalid_argument("coverage sweep needs [ntn] altitude_km");
            if (sw.formats.empty()) throw std::invalid_argument("empty format list");
            const auto pts = geometry::coverage_sweep(f.scenario.standard, sw.formats, *f.geometry, sw.alpha_from_deg,
                                                      sw.alpha_to_deg, sw.alpha_step_deg);
            csv = coverage_csv(pts);
            script = "coverage";
        } else {
            auto rtts = sw.rtts;
            for (double h : sw.altitudes_km) {
                auto g = f.geometry.value_or(geometry::NtnGeometry{});
                g.h_s_km = h;
                g.validate();
                rtts.push_back(geometry::rtt_at(g.alpha_max_deg, g));
            }
            if (rtts.empty()) throw std::invalid_argument("empty sweep list");
            if (sw.strategies.empty()) throw std::invalid_argument("empty strategy list");
            csv = engine::kpi_csv(engine::sweep_rtt(f.scenario, rtts, sw.strategies));
            script = "access";
        }
        if (output_path.empty()) {
            out << csv;
        } else {
            const auto path = resolve_output(output_path);
            if (!write_file(path, csv, err)) return static_cast<int>(kConfigError);
            if (opt.gnuplot) {
                const auto name = fs::path(path).filename().string();
                const auto gp = script == "coverage" ? gnuplot_coverage(name) : gnuplot_access(name);
                if (!write_file(sibling(path, ".gp"), gp, err)) return static_cast<int>(kConfigError);
            }
        }
        return static_cast<int>(kOk);
    });
}

int cmd_ladder(const std::string& scenario_path, const Options& opt, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        auto f = load_scenario(scenario_path);
        if (opt.seed) f.scenario.seed = *opt.seed;
        const auto steps = engine::run_ladder(f.scenario);
        out << fmt::format("ladder {} rtt={} ms\n", protocol::strategy_label(f.scenario.strategy),
                           engine::format_ms(f.scenario.rtt));
        for (std::size_t i = 0; i < steps.size(); ++i)
            out << fmt::format("step {} fixes={} stage={}\n", i + 1, protocol::to_string(steps[i].flags),
                               protocol::to_string(steps[i].stage));
        bool ok;
        if (f.scenario.rtt < Duration::sf(1)) {
            ok = std::all_of(steps.begin(), steps.end(),
                             [](const engine::LadderStep& s) { return s.stage == protocol::Stage::Connected; });
            out << (ok ? "all steps connected\n" : "expected every step to connect below 1 SF\n");
        } else {
            ok = engine::strictly_progresses(steps);
            out << (ok ? "strict progression\n" : "progression is not strict\n");
        }
        return static_cast<int>(ok ? kOk : kInvariantViolation);
    });
}

}  // namespace ntnra::cli
