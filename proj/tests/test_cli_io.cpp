#include "cavitycool/commands.hpp"
#include "cavitycool/config.hpp"
#include "cavitycool/csv.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cavitycool;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "cavitycool_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& json_text)
{
    try {
        parse_config_json(nlohmann::json::parse(json_text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

/// Small, fast configuration for exercising the commands end to end.
RunConfig small_config()
{
    return parse_config_json(nlohmann::json::parse(R"({
        "grid": {"x_points": 2, "y_points": 2, "z_points": 3},
        "sweep": {"detuning_points": 11, "couplings": ["300 MHz"], "z_points": 4, "epsilons": ["1 MHz"],
                  "map_detuning_points": 3, "map_z_points": 3, "cross_section_resolution": 3},
        "monte_carlo": {"cooling_trajectories": 2, "cooling_t_max": "400 ns", "export_trajectories": 1,
                        "loading_trajectories": 2, "loading_t_max": "400 ns", "kinetic_energies": ["6 uK", "20 uK"]}
    })"));
}

CommandContext context(const RunConfig& cfg, const fs::path& out, std::ostream& log)
{
    CommandContext ctx;
    ctx.config = cfg;
    ctx.out_dir = out.string();
    ctx.threads = 1;
    ctx.log = &log;
    return ctx;
}

} // namespace

// ------------------------------------------------------------------ config

TEST(Config, DefaultsMatchReferenceValues)
{
    const RunConfig c = parse_config_json(nlohmann::json::object());
    EXPECT_NEAR(c.params.kappa, constants::two_pi * 100e6, 1e-3);
    EXPECT_NEAR(c.params.Gamma, constants::two_pi * 2.61e6, 1e-3);
    EXPECT_EQ(c.params.delta_a, c.params.delta_c);
    EXPECT_NEAR(c.params.epsilon, constants::two_pi * 10e6, 1e-3);
    EXPECT_EQ(c.params.n_max, 4);
    EXPECT_DOUBLE_EQ(c.mc.dt, 8e-9);
    EXPECT_DOUBLE_EQ(c.mc.v0, 0.45);
    EXPECT_TRUE(c.provenance.count("system.kappa"));
    EXPECT_EQ(c.provenance.at("system.kappa"), "default");
}

TEST(Config, EmptyFileEqualsShippedTableConfig)
{
    const fs::path dir = fresh_dir("empty");
    std::ofstream(dir / "empty.json") << "\n";
    const RunConfig empty = parse_config((dir / "empty.json").string());
    const RunConfig table = parse_config(std::string(CAVITYCOOL_SOURCE_DIR) + "/configs/table1.json");
    EXPECT_EQ(empty.hash(), table.hash());
    EXPECT_EQ(empty.hash(), RunConfig{}.hash());
    EXPECT_EQ(table.provenance.at("system.kappa"), "user");
    // the grid cache is keyed on the calibrated coupling, so it must not depend on spelling
    EXPECT_EQ(calibrate_config(empty).geometry.g0, calibrate_config(table).geometry.g0);
}

TEST(Config, UnitsConvertToSI)
{
    EXPECT_DOUBLE_EQ(parse_quantity("2.5 GHz", Dimension::frequency, "f"), constants::two_pi * 2.5e9);
    EXPECT_DOUBLE_EQ(parse_quantity("  3 um ", Dimension::length, "l"), 3e-6);
    EXPECT_DOUBLE_EQ(parse_quantity("45 cm/s", Dimension::velocity, "v"), 0.45);
    EXPECT_DOUBLE_EQ(parse_quantity("-45 µK", Dimension::temperature, "t"), -45e-6);
    EXPECT_DOUBLE_EQ(parse_quantity("800 us", Dimension::time, "t"), 800e-6);
}

TEST(Config, NegativeRateNamesTheField)
{
    const std::string e = config_error(R"({"system": {"kappa": "-1 MHz"}})");
    EXPECT_NE(e.find("kappa"), std::string::npos) << e;
}

TEST(Config, UnknownKeyIsAnError)
{
    const std::string e = config_error(R"({"system": {"kapa": "1 MHz"}})");
    EXPECT_NE(e.find("system.kapa"), std::string::npos) << e;
}

TEST(Config, MissingOrWrongUnitIsAnError)
{
    std::string e = config_error(R"({"system": {"epsilon": "10"}})");
    EXPECT_NE(e.find("system.epsilon"), std::string::npos) << e;
    EXPECT_NE(e.find("missing unit"), std::string::npos) << e;
    e = config_error(R"({"mode": {"d": "100 MHz"}})");
    EXPECT_NE(e.find("mode.d"), std::string::npos) << e;
    e = config_error(R"({"system": {"epsilon": 10}})");
    EXPECT_NE(e.find("system.epsilon"), std::string::npos) << e;
}

TEST(Config, StepSizeGuard)
{
    EXPECT_NE(config_error(R"({"monte_carlo": {"dt": "25 ns"}})").find("20 ns"), std::string::npos);
    EXPECT_EQ(config_error(R"({"monte_carlo": {"dt": "20 ns"}})"), "");
}

TEST(Config, FormatVersionIsChecked)
{
    EXPECT_NE(config_error(R"({"format_version": 2})").find("format_version"), std::string::npos);
}

TEST(Config, MalformedJsonIsConfigError)
{
    const fs::path dir = fresh_dir("malformed");
    std::ofstream(dir / "bad.json") << "{ \"system\": ";
    EXPECT_THROW(parse_config((dir / "bad.json").string()), ConfigError);
    EXPECT_THROW(parse_config((dir / "nope.json").string()), ConfigError);
}

TEST(Config, HashTracksPhysicsOnly)
{
    RunConfig a, b;
    b.output_dir = "elsewhere";
    EXPECT_EQ(a.hash(), b.hash());
    b.params.epsilon *= 2.0;
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Hash, FnvReferenceVectors)
{
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

// ------------------------------------------------------------------ csv

TEST(Csv, ExactRoundTrip)
{
    CsvTable t;
    t.comments = {"config_hash = 0123456789abcdef"};
    t.header = {"a", "b", "c"};
    t.rows = {{0.1, 1.0 / 3.0, -2.5e-300}, {6.02214076e23, std::nextafter(1.0, 2.0), 0.0}};
    std::stringstream ss;
    t.write(ss);
    const CsvTable back = CsvTable::read(ss);
    EXPECT_EQ(back.comments, t.comments);
    EXPECT_EQ(back.header, t.header);
    EXPECT_EQ(back.rows, t.rows);
}

TEST(Csv, RejectsGarbageCells)
{
    std::stringstream ss("x,y\n1,abc\n");
    EXPECT_THROW(CsvTable::read(ss), ConfigError);
}

// ------------------------------------------------------------------ commands

TEST(Commands, SteadyStateOutputIsStampedAndReproducible)
{
    std::ostringstream log;
    const fs::path dir = fresh_dir("steady");
    const CommandContext ctx = context(small_config(), dir, log);
    ASSERT_EQ(run_command("steady-state", ctx, 1), 0);
    const std::string first = slurp(dir / "steady_state.csv");
    ASSERT_EQ(run_command("steady-state", ctx, 1), 0);
    EXPECT_EQ(first, slurp(dir / "steady_state.csv"));
    EXPECT_NE(first.find("# config_hash = " + ctx.config.hash()), std::string::npos);
    EXPECT_NE(first.find("# version = "), std::string::npos);

    const CsvTable t = CsvTable::load((dir / "steady_state.csv").string());
    EXPECT_EQ(t.header.front(), "g_MHz");
    EXPECT_EQ(t.rows.size(), 11u);
    const auto summary = nlohmann::json::parse(slurp(dir / "steady-state_summary.json"));
    EXPECT_EQ(summary["config_hash"], ctx.config.hash());
    EXPECT_TRUE(summary.contains("version"));
}

TEST(Commands, SimulateWithoutGridPointsToBuildGrid)
{
    std::ostringstream log;
    const fs::path dir = fresh_dir("nogrid");
    try {
        run_command("simulate", context(small_config(), dir, log), 1);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("build-grid"), std::string::npos) << e.what();
    }
}

TEST(Commands, GridIsReusedOnlyForMatchingConfig)
{
    std::ostringstream log;
    const fs::path dir = fresh_dir("grid");
    RunConfig cfg = small_config();
    ASSERT_EQ(run_command("build-grid", context(cfg, dir, log), 1), 0);
    ASSERT_TRUE(fs::exists(dir / "grid.bin"));

    ASSERT_EQ(run_command("simulate", context(cfg, dir, log), 3), 0);
    EXPECT_TRUE(fs::exists(dir / "simulate_ensemble.csv"));
    EXPECT_TRUE(fs::exists(dir / "trajectory_000.csv"));
    const auto summary = nlohmann::json::parse(slurp(dir / "simulate_summary.json"));
    EXPECT_EQ(summary["seed"], 3);
    EXPECT_EQ(summary["trajectories"], 2);

    cfg.params.epsilon = units::mhz(5.0);
    try {
        run_command("simulate", context(cfg, dir, log), 3);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos) << e.what();
    }
}

TEST(Commands, LoadRateUsesConfiguredFit)
{
    std::ostringstream log;
    const fs::path dir = fresh_dir("rate");
    RunConfig cfg = small_config();
    cfg.mc.p0 = 0.05;
    cfg.mc.t_eff_kelvin = 60e-6;
    ASSERT_EQ(run_command("load-rate", context(cfg, dir, log), 1), 0);
    const CsvTable t = CsvTable::load((dir / "load_rate.csv").string());
    ASSERT_FALSE(t.rows.empty());
    EXPECT_NEAR(t.rows.front()[1], 400.0 * 0.05, 1e-9); // T = 0: flux * P0, per ms
}

TEST(Commands, UnknownCommandIsRejected)
{
    std::ostringstream log;
    EXPECT_THROW(run_command("fly", context(RunConfig{}, fresh_dir("unknown"), log), 1), ConfigError);
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = fresh_dir("cli");
    std::ofstream(dir / "bad.json") << R"({"system": {"kappa": "-1 MHz"}})";
    auto run = [&](const std::string& args) {
        const std::string cmd = std::string(CAVITYCOOL_CLI) + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    EXPECT_EQ(run("--version"), 0);
    EXPECT_EQ(run("--config " + (dir / "bad.json").string() + " steady-state"), 2);
    EXPECT_NE(slurp(dir / "log.txt").find("kappa"), std::string::npos);
    EXPECT_EQ(run("--out " + dir.string() + " simulate"), 2);
    EXPECT_EQ(run("no-such-command"), 2);
}
