// Command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 numerical failure.

#include "cavitycool/commands.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv)
{
    using namespace cavitycool;

    CLI::App app{"Cavity cooling of atoms near a waveguide: coefficients, temperature maps, Monte-Carlo"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    std::string grid_cache;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    app.add_option("--config", config_path, "JSON config (missing keys take their defaults)");
    app.add_option("--seed", seed, "master seed for Monte-Carlo runs (overrides monte_carlo.seed)");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    app.add_option("--grid-cache", grid_cache, "coefficient grid cache file (default <out>/grid.bin)");
    const std::map<std::string, std::string> blurbs{
        {"steady-state", "full steady state and photon number vs pump detuning at fixed couplings"},
        {"force-sweep", "z force along the axis, weak-drive and numeric, for each pump rate"},
        {"coeff-sweep", "force, friction and diffusion along the axis for each pump rate"},
        {"teq-map", "weak-drive equilibrium temperature over detuning and height, plus cross sections"},
        {"build-grid", "tabulate numeric coefficients on the 3D grid used by the Monte-Carlo runs"},
        {"simulate", "in-trap cooling ensemble (needs build-grid)"},
        {"load-sweep", "trapping probability vs initial kinetic energy and its fit (needs build-grid)"},
        {"load-rate", "loading rate vs atom temperature from a fitted or given P0 and T_eff"}};
    for (const auto& name : command_names())
        app.add_subcommand(name, blurbs.at(name))->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        CommandContext ctx;
        ctx.config = config_path.empty() ? parse_config_json(nlohmann::json::object()) : parse_config(config_path);
        ctx.out_dir = out_dir.empty() ? ctx.config.output_dir : out_dir;
        ctx.threads = resolve_threads(threads);
        if (!grid_cache.empty())
            ctx.grid_cache = grid_cache;
        const std::uint64_t run_seed = app.count("--seed") ? seed : ctx.config.mc.seed;
        return run_command(app.get_subcommands().front()->get_name(), ctx, run_seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ContractViolation& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
