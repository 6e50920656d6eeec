#include "gfm/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "gfm/config.hpp"
#include "gfm/error.hpp"
#include "gfm/hinf_synthesis.hpp"
#include "gfm/linear_analysis.hpp"
#include "gfm/time_sim.hpp"

namespace gfm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFooter = R"(Commands:
  simulate  nonlinear RK4 run of the configured scenario
            -> trajectory.csv, metrics.json
  bode      closed-loop frequency response per configured channel pair
            (default inj.e1 -> omega_u) -> bode_<input>_<output>.csv
  tune      structured H-infinity tuning from the configured gains
            -> tune_result.json (the input config with tuned gains; accepted
               unchanged by simulate and bode)
  compare   baseline vs candidate gains (default table2-original vs
            table2-proposed) -> compare_report.json, bode_baseline.csv,
            bode_candidate.csv

Presets: table2-original, table2-proposed, vsg.

CSV columns:
  trajectory.csv  time_s, id, iq, vd, vq, iod, ioq, delta, vdc  (plant states, p.u.;
                  delta in rad wrapped to (-pi, pi]), x1, x2, x3 (controller
                  states), p, q, V, omega_u (outputs, p.u.), iu, Eu (commanded
                  inputs, p.u.). Every `scenario.decimate`-th sample (default 10).
  bode_*.csv      omega_rad_s, mag_dB, phase_deg (unwrapped), preceded by
                  '# input:' and '# output:' comment lines.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure. On failure a
JSON error record is printed to stderr and written to <out>/error.json, and
artifacts of the failed run are removed.)";

// Files written by one invocation; removed again if the run fails.
class Artifacts {
public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

    void prepare()
    {
        if (!fs::exists(dir_)) {
            fs::create_directories(dir_);
        } else if (!fs::is_directory(dir_)) {
            throw ConfigError("output path '" + dir_.string() + "' is not a directory");
        }
        fs::remove(dir_ / "error.json");
    }

    void write(const std::string& name, const std::string& content)
    {
        const fs::path path = dir_ / name;
        written_.push_back(path);
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << content;
        os.flush();
        if (!os)
            throw ConfigError("cannot write '" + path.string() + "'");
    }

    void discard() noexcept
    {
        std::error_code ec;
        for (const auto& p : written_)
            fs::remove(p, ec);
        written_.clear();
    }

    [[nodiscard]] const fs::path& dir() const noexcept { return dir_; }
    [[nodiscard]] bool ensure_dir() const noexcept
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        return fs::is_directory(dir_, ec);
    }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

struct Options {
    std::string command;
    std::string config;
    std::string preset;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
};

std::string file_token(std::string s)
{
    std::replace_if(s.begin(), s.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)); }, '_');
    return s;
}

RunConfig resolve_config(const Options& opt)
{
    RunConfig cfg = opt.config.empty() ? run_config_from_json(json::object()) : load_run_config(opt.config);
    if (!opt.preset.empty()) {
        const GainSet g = gain_preset(opt.preset);
        if (opt.command == "compare") {
            cfg.compare_candidate = g;
        } else {
            cfg.gains = g;
            cfg.source["gains"] = opt.preset;
        }
    }
    if (opt.seed)
        cfg.tune.seed = *opt.seed;
    cfg.validate();
    return cfg;
}

StateSpaceModel closed_loop_at_operating_point(const RunConfig& cfg, const GainSet& g)
{
    const Equilibrium eq = find_equilibrium(cfg.plant, cfg.scenario.setpoints, cfg.scenario.grid);
    const StateSpaceModel plant = linearize(eq.x, eq.u, cfg.scenario.grid, cfg.plant);
    return close_loop(plant, g, cfg.plant);
}

json channel_metrics(const Trajectory& traj, const MetricsOptions& m)
{
    json j = json::object();
    for (Channel c : {Channel::vdc, Channel::p, Channel::omega_u, Channel::q, Channel::V})
        j[std::string(to_string(c))] = to_json(run_scenario_metrics(traj, c, m.step_time, m.cutoff_hz));
    return j;
}

int simulate(const RunConfig& cfg, Artifacts& art, std::ostream& out)
{
    const Trajectory traj = integrate(cfg.plant, cfg.gains, cfg.scenario);
    if (traj.diverged)
        throw NumericalError(fmt::format("trajectory diverged at t = {:.6f} s", traj.time.back()));

    std::ostringstream csv;
    write_trajectory_csv(csv, traj, cfg.decimate);
    const json channels = channel_metrics(traj, cfg.metrics);
    const json report{{"kind", std::string(to_string(cfg.gains.kind))},
                      {"gains", to_json(cfg.gains)},
                      {"step_s", cfg.scenario.step},
                      {"duration_s", cfg.scenario.duration},
                      {"samples", traj.size()},
                      {"step_time_s", cfg.metrics.step_time},
                      {"primary_channel", std::string(to_string(cfg.metrics.channel))},
                      {"primary", to_json(run_scenario_metrics(traj, cfg.metrics.channel, cfg.metrics.step_time,
                                                               cfg.metrics.cutoff_hz))},
                      {"channels", channels}};
    art.write("trajectory.csv", csv.str());
    art.write("metrics.json", report.dump(2) + "\n");

    const json& p = report.at("primary");
    fmt::print(out, "simulate: {} samples, {} steady {:.6f}, settling {:.4f} s, overshoot {:.3f} %, residue {:.3e}\n",
               traj.size(), to_string(cfg.metrics.channel), p.at("steady_value").get<double>(),
               p.at("settling_time_s").get<double>(), p.at("overshoot_pct").get<double>(),
               p.at("hf_residue").get<double>());
    return ok;
}

int bode(const RunConfig& cfg, Artifacts& art, std::ostream& out)
{
    const StateSpaceModel cl = closed_loop_at_operating_point(cfg, cfg.gains);
    const StabilityReport st = is_stable(cl);
    if (!st.stable)
        warn(fmt::format("closed loop is unstable (abscissa {:.6g}); response shown for reference", st.abscissa));
    const std::vector<double> grid = log_grid(cfg.bode.omega_min, cfg.bode.omega_max, cfg.bode.points);

    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& pair : cfg.bode.pairs) {
        const FrequencyResponseTable table = frequency_response(cl, pair.input, pair.output, grid);
        std::ostringstream csv;
        write_bode_csv(csv, table);
        files.emplace_back(fmt::format("bode_{}_{}.csv", file_token(pair.input), file_token(pair.output)), csv.str());
        if (cfg.bode.omega_min <= 1e3 && cfg.bode.omega_max >= 1e5)
            fmt::print(out, "bode: {} -> {} slope over [1e3, 1e5] rad/s = {:.3f} dB/dec\n", pair.input, pair.output,
                       magnitude_slope(table, 1e3, 1e5));
    }
    for (const auto& [name, content] : files)
        art.write(name, content);
    fmt::print(out, "bode: wrote {} file(s), closed-loop abscissa {:.6g}\n", files.size(), st.abscissa);
    return ok;
}

int tune_command(const RunConfig& cfg, Artifacts& art, std::ostream& out)
{
    SynthesisProblem prob;
    prob.plant = cfg.plant;
    prob.setpoints = cfg.scenario.setpoints;
    prob.disturbance = cfg.scenario.grid;
    prob.kind = cfg.gains.kind;
    prob.frozen = cfg.frozen;
    prob.prepare();

    const TuneResult result = tune(prob, cfg.gains, cfg.tune);
    if (!result.found_stable)
        throw InstabilityError("tuning found no stabilizing gain set", result.abscissa);
    art.write("tune_result.json", tune_result_document(cfg, result).dump(2) + "\n");
    const double gamma0 = result.history.empty() ? result.gamma : result.history.front().gamma;
    fmt::print(out, "tune: gamma {:.6g} -> {:.6g} in {} evaluations (seed {})\n", gamma0, result.gamma,
               result.evaluations, result.seed);
    return ok;
}

json compare_one(const RunConfig& cfg, const GainSet& g, const std::string& label,
                 std::vector<std::pair<std::string, std::string>>& files)
{
    const StateSpaceModel cl = closed_loop_at_operating_point(cfg, g);
    const StabilityReport st = is_stable(cl);
    const FrequencyResponseTable table = frequency_response(cl, "inj.e1", "omega_u", bode_grid());
    std::ostringstream csv;
    write_bode_csv(csv, table);
    files.emplace_back("bode_" + label + ".csv", csv.str());

    json j{{"kind", std::string(to_string(g.kind))},
           {"gains", to_json(g)},
           {"stable", st.stable},
           {"abscissa", st.abscissa},
           {"slope_e1_omega_u_db_per_dec", magnitude_slope(table, 1e3, 1e5)}};

    SynthesisProblem prob;
    prob.plant = cfg.plant;
    prob.setpoints = cfg.scenario.setpoints;
    prob.disturbance = cfg.scenario.grid;
    prob.kind = g.kind;
    prob.prepare();
    const ObjectiveValue obj = evaluate_objective(g, prob);
    j["objective"] = obj.value;

    const Trajectory traj = integrate(cfg.plant, g, cfg.scenario);
    j["diverged"] = traj.diverged;
    j["step_metrics"] = traj.diverged ? json(nullptr) : channel_metrics(traj, cfg.metrics);
    return j;
}

int compare(const RunConfig& cfg, Artifacts& art, std::ostream& out)
{
    std::vector<std::pair<std::string, std::string>> files;
    const json base = compare_one(cfg, cfg.compare_baseline, "baseline", files);
    const json cand = compare_one(cfg, cfg.compare_candidate, "candidate", files);

    json report{{"pair", {{"input", "inj.e1"}, {"output", "omega_u"}}},
                {"slope_band_rad_s", {1e3, 1e5}},
                {"baseline", base},
                {"candidate", cand}};
    if (!base.at("diverged").get<bool>() && !cand.at("diverged").get<bool>()) {
        const double rb = base.at("step_metrics").at("omega_u").at("hf_residue").get<double>();
        const double rc = cand.at("step_metrics").at("omega_u").at("hf_residue").get<double>();
        report["omega_u_residue_ratio"] = rc > 0.0 ? json(rb / rc) : json(nullptr);
    }
    for (const auto& [name, content] : files)
        art.write(name, content);
    art.write("compare_report.json", report.dump(2) + "\n");

    for (const auto& [label, j] : {std::pair{"baseline", &base}, std::pair{"candidate", &cand}})
        fmt::print(out, "compare: {:9} {:9} abscissa {:9.4f}  slope e1->omega_u {:8.3f} dB/dec  objective {:.6g}\n",
                   label, j->at("kind").get<std::string>(), j->at("abscissa").get<double>(),
                   j->at("slope_e1_omega_u_db_per_dec").get<double>(), j->at("objective").get<double>());
    return ok;
}

json error_record(int code, const std::string& kind, const std::string& command, const std::string& message)
{
    return json{{"error", {{"exit_code", code}, {"kind", kind}, {"command", command}, {"message", message}}}};
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options opt;
    CLI::App app{"gfmlab: grid-forming converter control analysis (simulate, bode, tune, compare)", "gfmlab"};
    app.footer(kFooter);
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", opt.config, "JSON run configuration (defaults are used when omitted)");
    app.add_option("--preset", opt.preset, "gain preset replacing the config gains (compare: the candidate)");
    app.add_option("--out", opt.out, "output directory")->capture_default_str();
    app.add_option("--seed", opt.seed, "tuner seed (overrides tune.seed)");
    for (const char* name : {"simulate", "bode", "tune", "compare"})
        app.add_subcommand(name, "")->callback([&opt, name] { opt.command = name; });
    app.get_subcommand("simulate")->description("nonlinear time-domain run of the configured scenario");
    app.get_subcommand("bode")->description("closed-loop frequency response CSVs");
    app.get_subcommand("tune")->description("structured H-infinity tuning of the configured gains");
    app.get_subcommand("compare")->description("side-by-side report for two gain sets");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << error_record(config_error, "usage", opt.command, e.what()).dump() << "\n";
        return config_error;
    }

    Artifacts art{fs::path(opt.out)};
    auto fail = [&](int code, const std::string& kind, const std::string& message) {
        art.discard();
        const json rec = error_record(code, kind, opt.command, message);
        err << rec.dump() << "\n";
        if (art.ensure_dir()) {
            std::ofstream os(art.dir() / "error.json", std::ios::binary | std::ios::trunc);
            os << rec.dump(2) << "\n";
        }
        return code;
    };

    try {
        const RunConfig cfg = resolve_config(opt);
        art.prepare();
        if (opt.command == "simulate")
            return simulate(cfg, art, out);
        if (opt.command == "bode")
            return bode(cfg, art, out);
        if (opt.command == "tune")
            return tune_command(cfg, art, out);
        return compare(cfg, art, out);
    } catch (const ConfigError& e) {
        return fail(config_error, "config", e.what());
    } catch (const InstabilityError& e) {
        return fail(numerical_failure, "instability", e.what());
    } catch (const ConvergenceError& e) {
        return fail(numerical_failure, "convergence", e.what());
    } catch (const NumericalError& e) {
        return fail(numerical_failure, "numerical", e.what());
    } catch (const fs::filesystem_error& e) {
        return fail(config_error, "io", e.what());
    } catch (const std::exception& e) {
        return fail(numerical_failure, "internal", e.what());
    }
}

} // namespace gfm::cli
