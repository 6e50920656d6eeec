#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gfm/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = gfm::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path p = fs::current_path() / "cli_out" / name;
    fs::remove_all(p);
    return p;
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& j)
{
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const json kShortRun = {{"scenario", {{"duration", 0.3}, {"decimate", 50}}}};

} // namespace

TEST_CASE("help documents commands, CSV columns and exit codes")
{
    const Result r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("simulate") != std::string::npos);
    CHECK(r.out.find("time_s, id, iq") != std::string::npos);
    CHECK(r.out.find("omega_rad_s, mag_dB, phase_deg") != std::string::npos);
    CHECK(r.out.find("Exit codes") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2")
{
    CHECK(run({}).code == 2);
    CHECK(run({"launch"}).code == 2);
    CHECK(run({"simulate", "--seed", "abc"}).code == 2);
}

TEST_CASE("simulate writes deterministic artifacts")
{
    const fs::path a = fresh_dir("sim_a");
    const fs::path b = fresh_dir("sim_b");
    const fs::path cfg = write_config(fresh_dir("sim_cfg"), "run.json", kShortRun);
    const Result ra = run({"simulate", "--config", cfg.string(), "--out", a.string()});
    const Result rb = run({"simulate", "--config", cfg.string(), "--out", b.string()});
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    CHECK(fs::exists(a / "trajectory.csv"));
    CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
    CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));
    const json m = json::parse(slurp(a / "metrics.json"));
    CHECK(m.at("primary_channel") == "p");
    CHECK(m.at("channels").contains("omega_u"));
    CHECK(m.at("samples") == 15001);
}

TEST_CASE("configuration errors leave an error record and no artifacts")
{
    const fs::path out = fresh_dir("bad_cfg");
    const fs::path cfg = write_config(fresh_dir("bad_cfg_in"), "run.json", json{{"scenario", {{"step", 1.0}}}});
    const Result r = run({"simulate", "--config", cfg.string(), "--out", out.string()});
    CHECK(r.code == 2);
    const json rec = json::parse(r.err);
    CHECK(rec.at("error").at("exit_code") == 2);
    CHECK(rec.at("error").at("kind") == "config");
    CHECK(fs::exists(out / "error.json"));
    CHECK_FALSE(fs::exists(out / "trajectory.csv"));

    CHECK(run({"bode", "--preset", "table9", "--out", out.string()}).code == 2);
    CHECK(run({"simulate", "--config", "/no/such/file.json", "--out", out.string()}).code == 2);
}

TEST_CASE("numerical failures exit with code 3 and remove partial artifacts")
{
    const fs::path out = fresh_dir("diverge");
    const json j = {{"gains", {{"preset", "table2-proposed"}, {"k_idc", -2811.2}, {"k_pdc", -18.8801}}},
                    {"scenario", {{"duration", 2.0}}}};
    const fs::path cfg = write_config(fresh_dir("diverge_in"), "run.json", j);
    const Result r = run({"simulate", "--config", cfg.string(), "--out", out.string()});
    CHECK(r.code == 3);
    CHECK(json::parse(r.err).at("error").at("exit_code") == 3);
    CHECK(fs::exists(out / "error.json"));
    CHECK_FALSE(fs::exists(out / "trajectory.csv"));
    CHECK_FALSE(fs::exists(out / "metrics.json"));
}

TEST_CASE("bode default pair and byte-identical output")
{
    const fs::path a = fresh_dir("bode_a");
    const fs::path b = fresh_dir("bode_b");
    REQUIRE(run({"bode", "--preset", "table2-proposed", "--out", a.string()}).code == 0);
    REQUIRE(run({"bode", "--preset", "table2-proposed", "--out", b.string()}).code == 0);
    const fs::path csv = a / "bode_inj_e1_omega_u.csv";
    REQUIRE(fs::exists(csv));
    CHECK(slurp(csv) == slurp(b / "bode_inj_e1_omega_u.csv"));

    // Least-squares slope over [1e3, 1e5] straight from the CSV.
    std::istringstream is(slurp(csv));
    std::string line;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'o')
            continue;
        std::istringstream ls(line);
        double w, m;
        char comma;
        ls >> w >> comma >> m;
        if (w < 1e3 || w > 1e5)
            continue;
        const double x = std::log10(w);
        sx += x;
        sy += m;
        sxx += x * x;
        sxy += x * m;
        ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(-20.0).epsilon(5e-3));
}

TEST_CASE("tune result is accepted unchanged by simulate and bode")
{
    const fs::path out = fresh_dir("tune");
    const fs::path cfg =
        write_config(fresh_dir("tune_in"), "run.json",
                     json{{"tune", {{"max_evals", 40}, {"restarts", 2}}}, {"scenario", {{"duration", 0.3}}}});
    const Result r = run({"tune", "--config", cfg.string(), "--out", out.string(), "--seed", "17"});
    REQUIRE(r.code == 0);
    const fs::path result = out / "tune_result.json";
    REQUIRE(fs::exists(result));
    const json doc = json::parse(slurp(result));
    CHECK(doc.at("tune_result").at("seed") == 17);
    CHECK(doc.at("tune_result").at("evaluations").get<int>() <= 40);
    CHECK(doc.at("gains").at("kind") == "proposed");

    CHECK(run({"simulate", "--config", result.string(), "--out", (out / "sim").string()}).code == 0);
    CHECK(run({"bode", "--config", result.string(), "--out", (out / "bode").string()}).code == 0);

    const fs::path again = fresh_dir("tune_again");
    REQUIRE(run({"tune", "--config", cfg.string(), "--out", again.string(), "--seed", "17"}).code == 0);
    CHECK(slurp(result) == slurp(again / "tune_result.json"));
}

TEST_CASE("compare reports slopes for both controllers")
{
    const fs::path out = fresh_dir("compare");
    const fs::path cfg = write_config(fresh_dir("compare_in"), "run.json", kShortRun);
    const Result r = run({"compare", "--config", cfg.string(), "--out", out.string()});
    REQUIRE(r.code == 0);
    const json rep = json::parse(slurp(out / "compare_report.json"));
    CHECK(rep.at("baseline").at("kind") == "mimo_gfm");
    CHECK(rep.at("candidate").at("kind") == "proposed");
    CHECK(rep.at("baseline").at("slope_e1_omega_u_db_per_dec").get<double>() > -10.0);
    CHECK(rep.at("candidate").at("slope_e1_omega_u_db_per_dec").get<double>() ==
          doctest::Approx(-20.0).epsilon(5e-3));
    CHECK(rep.at("baseline").at("stable") == true);
    CHECK(fs::exists(out / "bode_baseline.csv"));
    CHECK(fs::exists(out / "bode_candidate.csv"));
}
