#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "xwin/cli.hpp"

using namespace xwin;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("xwin_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_config(const std::string& name, const json& j) {
    auto p = scratch() / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::string& args) {
    static int counter = 0;
    auto out = scratch() / ("out" + std::to_string(counter) + ".txt");
    auto err = scratch() / ("err" + std::to_string(counter++) + ".txt");
    std::string cmd = std::string(XWIN_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

json base() {
    return json::parse(R"({
      "profile": {"variant": "damped_oscillatory", "parameters": {"alpha": 1.0, "beta": 1.0}},
      "quantum": {"l_min": 0, "l_max": 3, "k": [0, 1]},
      "solver": {"truncation": 2}
    })");
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> row;
        std::string cell;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char ch = line[i];
            if (quoted) {
                if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') cell += '"', ++i;
                else if (ch == '"') quoted = false;
                else cell += ch;
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                row.push_back(cell);
                cell.clear();
            } else {
                cell += ch;
            }
        }
        row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

config::ConfigError config_error_of(const json& j) {
    try {
        config::parse(j);
    } catch (const config::ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no error for " << j.dump();
    return config::ConfigError("", "");
}

}  // namespace

TEST(Config, Defaults) {
    auto c = config::parse(json::object());
    EXPECT_EQ(c.l_min, 0);
    EXPECT_EQ(c.format, "csv");
    EXPECT_EQ(c.precision, 12);
    EXPECT_EQ(c.window_scale, constraints::WindowScale::unit);
}

TEST(Config, UnknownKeysNamePath) {
    auto j = base();
    j["solver"]["tolerances"] = {{"integrator", 1e-10}, {"bogus", 1}};
    EXPECT_EQ(config_error_of(j).key_path(), "solver.tolerances.bogus");
    j = base();
    j["profile"]["parameters"]["gamma"] = 2.0;
    EXPECT_EQ(config_error_of(j).key_path(), "profile.parameters.gamma");
    j = base();
    j["extra"] = 1;
    EXPECT_EQ(config_error_of(j).key_path(), "extra");
}

TEST(Config, OutOfRangeValues) {
    auto j = base();
    j["quantum"]["l_max"] = -1;
    EXPECT_EQ(config_error_of(j).key_path(), "quantum.l_max");
    j = base();
    j["solver"]["truncation"] = 12;
    EXPECT_EQ(config_error_of(j).key_path(), "solver.truncation");
    j = base();
    j["solver"]["tolerances"] = {{"agreement", 0.0}};
    EXPECT_EQ(config_error_of(j).key_path(), "solver.tolerances.agreement");
    j = base();
    j["probe"] = {{"eps_range", {-0.5, 0.5}}};
    EXPECT_EQ(config_error_of(j).key_path(), "probe.eps_range");
    j = base();
    j["profile"]["variant"] = "sawtooth";
    EXPECT_EQ(config_error_of(j).key_path(), "profile.variant");
    j = base();
    j["quantum"]["k"] = {0, 2};
    EXPECT_EQ(config_error_of(j).key_path(), "quantum.k[1]");
    j = base();
    j["profile"]["parameters"].erase("beta");
    EXPECT_EQ(config_error_of(j).key_path(), "profile.parameters.beta");
}

TEST(Config, EchoReparses) {
    auto j = base();
    j["constants"] = {{"units", "SI"}, {"m", 9.1093837015e-31}};
    j["probe"] = {{"energy", {1.5, 0.25}}};
    auto c = config::parse(j);
    auto again = config::parse(config::to_json(c));
    EXPECT_EQ(config::to_json(again).dump(), config::to_json(c).dump());
    EXPECT_EQ(again.energy, std::complex<double>(1.5, 0.25));
    EXPECT_EQ(again.constants.units, Units::si);
}

TEST(Formatting, TwelveDigits) {
    EXPECT_EQ(cli::format_number(M_PI, 12), "3.14159265359");
    EXPECT_EQ(cli::format_number(-0.0, 12), "0");
    EXPECT_EQ(cli::format_number(1.0 / 0.0, 12), "inf");
    EXPECT_EQ(cli::rounded(M_PI, 12), 3.14159265359);
}

TEST(Commands, GroundStatesInSweep) {
    auto c = config::parse(base());
    auto rep = cli::cmd_spectrum(c);
    std::vector<double> ground;
    for (const auto& row : rep.rows)
        if (std::get<long>(row[0]) == 0 && std::get<long>(row[1]) == 0 && !std::get<bool>(row[10]))
            ground.push_back(std::get<double>(row[3]));
    ASSERT_EQ(ground.size(), 4u);
    EXPECT_DOUBLE_EQ(ground[0], 0.0);
    EXPECT_NEAR(ground[1], 2.0, 1e-12);
    EXPECT_NEAR(ground[2], 6.0, 1e-12);
    EXPECT_NEAR(ground[3], 12.0, 1e-12);
}

TEST(Commands, SIEnergies) {
    auto j = base();
    double me = 9.1093837015e-31, rc = 1.6e-10;
    j["profile"]["rho_c"] = rc;
    j["constants"] = {{"units", "SI"}, {"m", me}};
    auto rep = cli::cmd_spectrum(config::parse(j));
    double hbar = 1.054571817e-34, unit = hbar * hbar / (2 * me * rc * rc);
    for (const auto& row : rep.rows) {
        if (std::get<bool>(row[10])) continue;
        EXPECT_NEAR(std::get<double>(row[5]), std::get<double>(row[3]) * unit, 1e-12 * unit * 20);
    }
}

TEST(Commands, BracketsZeroAndLinearProfiles) {
    auto j = base();
    j["profile"] = {{"variant", "zero"}};
    auto rep = cli::cmd_brackets(config::parse(j));
    EXPECT_EQ(rep.rows.size(), 45u * 3);
    for (const auto& row : rep.rows) EXPECT_EQ(std::get<double>(row[6]), 0.0);
    EXPECT_EQ(std::get<std::string>(rep.rows[0][0]), "[r,p_r]");
    EXPECT_EQ(std::get<double>(rep.rows[0][4]), 1.0);
    j["profile"] = {{"variant", "polynomial"}, {"parameters", {{"chart", "r"}, {"coeffs", {0.0, 1.0}}}}};
    j["constants"] = {{"hbar", 2.0}};
    rep = cli::cmd_brackets(config::parse(j));
    EXPECT_NEAR(std::get<double>(rep.rows[0][4]), 1.0, 1e-15);  // hbar / 2
    EXPECT_NEAR(std::get<double>(rep.rows[0][5]), 1.0, 1e-15);
}

TEST(Commands, ClassifyDefaults) {
    auto rep = cli::cmd_classify(config::parse(base()));
    for (const auto& row : rep.rows) {
        std::string kind = std::get<std::string>(row[2]);
        if (std::get<double>(row[1]) == 0.0) EXPECT_EQ(kind, "irregular");
        else EXPECT_TRUE(kind == "regular" || kind == "ordinary") << kind;
    }
    auto j = base();
    j["profile"] = {{"variant", "zero"}};
    j["probe"] = {{"eps_points", {1.0, 0.5}}};
    rep = cli::cmd_classify(config::parse(j));
    for (const auto& row : rep.rows) EXPECT_EQ(std::get<std::string>(row[2]), "ordinary");
}

TEST(Commands, SolveFreeAndDegreeZero) {
    auto j = base();
    j["profile"] = {{"variant", "zero"}};
    j["quantum"] = {{"l_min", 0}, {"l_max", 0}, {"k", {0}}};
    j["probe"] = {{"energy", 9.8696044010893586}, {"a1", -3.1415926535897931}};
    auto rep = cli::cmd_solve(config::parse(j));
    EXPECT_LT(rep.meta["summary"]["max_abs_diff"].get<double>(), 1e-6);
    j["solver"]["series_degree"] = 0;
    rep = cli::cmd_solve(config::parse(j));
    for (const auto& row : rep.rows) EXPECT_EQ(std::get<double>(row[1]), 1.0);
    auto d = base();
    d["probe"] = {{"eps_range", {0.5, 1.5}}};
    rep = cli::cmd_solve(config::parse(d));
    for (const auto& row : rep.rows)
        for (int i = 1; i <= 5; ++i) EXPECT_TRUE(std::isfinite(std::get<double>(row[i])));
}

TEST(Commands, EtaConditionsRows) {
    auto j = base();
    j["quantum"] = {{"l_min", 1}, {"l_max", 1}};
    auto rep = cli::cmd_eta_conditions(config::parse(j), 2);
    ASSERT_EQ(rep.rows.size(), 1u);
    EXPECT_EQ(std::get<long>(rep.rows[0][1]), 3);
}

TEST(Binary, ExitCodes) {
    auto ok = write_config("ok.json", base());
    EXPECT_EQ(run("spectrum --config " + ok).code, 0);
    auto bad = base();
    bad["solver"]["depth"] = 3;
    auto r = run("spectrum --config " + write_config("bad.json", bad));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("solver.depth"), std::string::npos) << r.err;
    {
        std::ofstream(scratch() / "broken.json") << "{\"profile\": ";
    }
    EXPECT_EQ(run("spectrum --config " + (scratch() / "broken.json").string()).code, 2);
    EXPECT_EQ(run("spectrum --config " + ok + " --format xml").code, 2);
    EXPECT_EQ(run("frobnicate --config " + ok).code, 2);
    // integration into the essential singularity
    auto fail = base();
    fail["probe"] = {{"eps_range", {1e-9, 1.2}}, {"energy", -1e4}};
    fail["profile"] = {{"variant", "zero"}};
    r = run("solve --config " + write_config("fail.json", fail));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("radial"), std::string::npos) << r.err;
}

TEST(Binary, StrictModeFlagsRouteDisagreement) {
    auto j = base();
    j["solver"]["tolerances"] = {{"agreement", 1e-300}};
    auto cfg = write_config("strict.json", j);
    auto loose = run("classify --config " + cfg);
    EXPECT_EQ(loose.code, 0);
    EXPECT_NE(loose.err.find("coefficient routes disagree"), std::string::npos);
    EXPECT_EQ(run("classify --strict --config " + cfg).code, 4);
    EXPECT_EQ(run("classify --strict --config " + write_config("ok2.json", base())).code, 0);
}

TEST(Binary, ByteIdenticalRuns) {
    auto cfg = write_config("det.json", base());
    for (const char* fmt : {"csv", "json"}) {
        auto a = run(std::string("spectrum --format ") + fmt + " --config " + cfg);
        auto b = run(std::string("spectrum --format ") + fmt + " --config " + cfg);
        EXPECT_EQ(a.code, 0);
        EXPECT_EQ(a.out, b.out);
        EXPECT_FALSE(a.out.empty());
    }
    auto f = scratch() / "written.csv";
    EXPECT_EQ(run("spectrum --config " + cfg + " --out " + f.string()).code, 0);
    EXPECT_EQ(slurp(f), run("spectrum --config " + cfg).out);
}

TEST(Binary, CsvAndJsonCarryTheSameNumbers) {
    auto cfg = write_config("eq.json", base());
    for (const char* cmd : {"spectrum", "classify", "solve", "eta-conditions", "brackets"}) {
        auto csv = parse_csv(run(std::string(cmd) + " --config " + cfg).out);
        auto js = json::parse(run(std::string(cmd) + " --format json --config " + cfg).out);
        const auto& res = js["results"];
        ASSERT_EQ(csv.size(), res.size() + 1) << cmd;
        for (std::size_t i = 0; i < res.size(); ++i) {
            std::size_t col = 0;
            for (auto it = res[i].begin(); it != res[i].end(); ++it, ++col) {
                EXPECT_EQ(csv[0][col], it.key());
                const std::string& cell = csv[i + 1][col];
                if (it->is_null()) EXPECT_EQ(cell, "");
                else if (it->is_number()) EXPECT_EQ(std::strtod(cell.c_str(), nullptr), it->get<double>()) << cmd;
                else if (it->is_boolean()) EXPECT_EQ(cell, it->get<bool>() ? "true" : "false");
                else EXPECT_EQ(cell, it->get<std::string>());
            }
        }
    }
}

TEST(Binary, ProfileEchoRoundTrips) {
    auto j = base();
    j["profile"] = {{"variant", "taylor_at_boundary"}, {"parameters", {{"coeffs", {0.3, 0.5, -0.4, 0.2}}}}};
    auto first = run("brackets --format json --config " + write_config("rt1.json", j));
    auto echo = json::parse(first.out)["meta"]["config"];
    auto second = run("brackets --format json --config " + write_config("rt2.json", echo));
    ASSERT_EQ(first.code, 0);
    EXPECT_EQ(json::parse(first.out)["results"], json::parse(second.out)["results"]);
}

TEST(Binary, SampleConfigsRun) {
    for (const auto& e : fs::directory_iterator(fs::path(XWIN_SOURCE_DIR) / "configs")) {
        if (e.path().extension() != ".json") continue;
        auto r = run("spectrum --config " + e.path().string());
        EXPECT_EQ(r.code, 0) << e.path() << r.err;
    }
}
