#pragma once

// Subcommands of the cavitycool tool. Each writes CSV tables and a JSON
// summary into the output directory; every file carries the config hash and
// the build version.

#include "cavitycool/calibration.hpp"
#include "cavitycool/coefficients.hpp"
#include "cavitycool/config.hpp"
#include "cavitycool/csv.hpp"
#include "cavitycool/langevin.hpp"
#include "cavitycool/parallel.hpp"
#include "cavitycool/thermo.hpp"
#include "cavitycool/weak_drive.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cavitycool {

struct CommandContext {
    RunConfig config;
    std::string out_dir;
    unsigned threads = 1;
    std::optional<std::string> grid_cache; // default <out>/grid.bin
    std::ostream* log = &std::cerr;

    std::string grid_path() const { return grid_cache ? *grid_cache : (std::filesystem::path(out_dir) / "grid.bin").string(); }
    std::string path(const std::string& file) const { return (std::filesystem::path(out_dir) / file).string(); }
};

// ---------------------------------------------------------------- shared setup

/// Calibrated mode and trap for a config.
inline CalibrationResult calibrate_config(const RunConfig& cfg)
{
    return calibrate(cfg.calibration_targets(), cfg.params, cfg.geometry_template(), cfg.trap_template());
}

/// Loads the coefficient grid for this config and calibration, or explains how to make one.
inline CoefficientGrid load_grid_for(const RunConfig& cfg, const CalibrationResult& cal, const std::string& path)
{
    if (!std::filesystem::exists(path))
        throw ConfigError("grid cache " + path + " not found; run `cavitycool build-grid` with the same config first");
    return CoefficientGrid::load(path, cfg.grid_metadata(cal.geometry));
}

inline TrajectoryConfig trajectory_config(const RunConfig& cfg, const CalibrationResult& cal, double t_max)
{
    TrajectoryConfig tc;
    tc.step.dt = cfg.mc.dt;
    tc.step.mass = cfg.params.mass;
    tc.t_max = t_max;
    tc.sample_stride = cfg.mc.sample_stride;
    tc.region = cfg.escape_region();
    tc.escape_energy = escape_energy(TrapField{cal.trap}, tc.region, cal.trap_minimum_z);
    return tc;
}

/// In-trap cooling ensemble: atoms start at the trap minimum moving away from the surface.
inline EnsembleConfig cooling_ensemble_config(const RunConfig& cfg, const CalibrationResult& cal, std::uint64_t seed,
    unsigned threads)
{
    EnsembleConfig ec;
    ec.trajectory = trajectory_config(cfg, cal, cfg.mc.cooling_t_max);
    ec.count = cfg.mc.cooling_trajectories;
    ec.master_seed = seed;
    ec.threads = threads;
    ec.u_reference = cal.trap_minimum_u;
    return ec;
}

inline AtomState cooling_initial_state(const RunConfig& cfg, const CalibrationResult& cal)
{
    AtomState s;
    s.position = Vec3(0.0, 0.0, cal.trap_minimum_z);
    s.velocity = Vec3(0.0, 0.0, cfg.mc.v0);
    return s;
}

inline EnsembleConfig loading_ensemble_config(const RunConfig& cfg, const CalibrationResult& cal, std::uint64_t seed,
    unsigned threads)
{
    EnsembleConfig ec;
    ec.trajectory = trajectory_config(cfg, cal, cfg.mc.loading_t_max);
    ec.count = cfg.mc.loading_trajectories;
    ec.master_seed = seed;
    ec.threads = threads;
    ec.u_reference = cal.trap_minimum_u;
    return ec;
}

inline LoadingProtocol loading_protocol(const RunConfig& cfg)
{
    LoadingProtocol lp;
    lp.z_start = cfg.mc.z_start;
    lp.cone_half_angle = cfg.mc.cone_half_angle_deg * std::numbers::pi / 180.0;
    return lp;
}

// ---------------------------------------------------------------- output helpers

namespace detail {

inline void stamp(CsvTable& t, const CommandContext& ctx, const std::string& command)
{
    std::vector<std::string> head{"cavitycool " + command, "config_hash = " + ctx.config.hash(),
        "version = " + version_string()};
    t.comments.insert(t.comments.begin(), head.begin(), head.end());
}

inline void save_table(CsvTable t, const CommandContext& ctx, const std::string& command, const std::string& file)
{
    stamp(t, ctx, command);
    t.save(ctx.path(file));
    *ctx.log << "wrote " << ctx.path(file) << "\n";
}

inline nlohmann::json summary_head(const CommandContext& ctx, const std::string& command)
{
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = ctx.config.hash();
    j["version"] = version_string();
    nlohmann::json user = nlohmann::json::array();
    for (const auto& [k, v] : ctx.config.provenance)
        if (v == "user")
            user.push_back(k);
    j["user_set_keys"] = user;
    return j;
}

inline void save_summary(const nlohmann::json& j, const CommandContext& ctx, const std::string& command)
{
    const std::string file = ctx.path(command + "_summary.json");
    std::ofstream out(file);
    if (!out)
        throw ConfigError("cannot open output file: " + file);
    out << j.dump(2) << "\n";
    *ctx.log << "wrote " << file << "\n";
}

inline std::vector<std::string> mat_header(const std::string& prefix)
{
    std::vector<std::string> h;
    for (const char* a : {"x", "y", "z"})
        for (const char* b : {"x", "y", "z"})
            h.push_back(prefix + a + b);
    return h;
}

inline void append(std::vector<double>& row, const Mat3& m)
{
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            row.push_back(m(r, c));
}

inline double per_ms(double rate) { return rate * 1e-3; }

} // namespace detail

// ---------------------------------------------------------------- commands

/// Photon number and excitation vs pump detuning (Delta_a = Delta_c) at fixed couplings.
inline int cmd_steady_state(const CommandContext& ctx)
{
    const RunConfig& cfg = ctx.config;
    const auto detunings = linspace(cfg.sweep.detuning_lo, cfg.sweep.detuning_hi, cfg.sweep.detuning_points);
    const auto& gs = cfg.sweep.couplings;
    std::vector<Observables> obs(gs.size() * detunings.size());
    parallel_for(detunings.size(), ctx.threads, [&](std::size_t i) {
        SystemParams p = cfg.params;
        p.delta_a = p.delta_c = detunings[i];
        const LiouvillianParts parts = liouvillian_parts(p);
        for (std::size_t k = 0; k < gs.size(); ++k)
            obs[k * detunings.size() + i] = observables(steady_state(parts.at(gs[k])));
    });

    CsvTable t;
    t.header = {"g_MHz", "delta_p_MHz", "n_bar", "p_e", "n_bar_empty"};
    nlohmann::json peaks = nlohmann::json::array();
    for (std::size_t k = 0; k < gs.size(); ++k) {
        const std::size_t base = k * detunings.size();
        nlohmann::json maxima = nlohmann::json::array();
        for (std::size_t i = 0; i < detunings.size(); ++i) {
            const Observables& o = obs[base + i];
            const double d = detunings[i];
            const double empty = cfg.params.epsilon * cfg.params.epsilon / (d * d + cfg.params.kappa * cfg.params.kappa);
            t.rows.push_back({units::to_mhz(gs[k]), units::to_mhz(d), o.n_bar, o.p_e, empty});
            if (i > 0 && i + 1 < detunings.size() && o.n_bar > obs[base + i - 1].n_bar && o.n_bar >= obs[base + i + 1].n_bar)
                maxima.push_back({{"delta_p_MHz", units::to_mhz(d)}, {"n_bar", o.n_bar}});
        }
        peaks.push_back({{"g_MHz", units::to_mhz(gs[k])}, {"local_maxima", maxima}});
    }
    detail::save_table(t, ctx, "steady-state", "steady_state.csv");
    nlohmann::json j = detail::summary_head(ctx, "steady-state");
    j["epsilon_MHz"] = units::to_mhz(cfg.params.epsilon);
    j["n_max"] = cfg.params.n_max;
    j["photon_number"] = peaks;
    detail::save_summary(j, ctx, "steady-state");
    return 0;
}

namespace detail {
inline std::vector<Vec3> sweep_positions(const RunConfig& cfg)
{
    std::vector<Vec3> out;
    for (double z : linspace(cfg.sweep.z_lo, cfg.sweep.z_hi, cfg.sweep.z_points))
        out.emplace_back(cfg.sweep.offset_x, cfg.sweep.offset_y, z);
    return out;
}
} // namespace detail

/// Mean light force along z, numeric steady state vs weak-drive closed form, per pump rate.
inline int cmd_force_sweep(const CommandContext& ctx)
{
    const RunConfig& cfg = ctx.config;
    const CalibrationResult cal = calibrate_config(cfg);
    const auto positions = detail::sweep_positions(cfg);
    CsvTable t;
    t.header = {"epsilon_MHz", "z_nm", "g_MHz", "F_num_x_N", "F_num_y_N", "F_num_z_N", "F_weak_x_N", "F_weak_y_N",
        "F_weak_z_N", "n_bar", "p_e"};
    nlohmann::json peaks = nlohmann::json::array();
    for (double eps : cfg.sweep.epsilons) {
        SystemParams p = cfg.params;
        p.epsilon = eps;
        const NumericEvaluator ev(p);
        std::vector<CoefficientPoint> num(positions.size());
        std::vector<CouplingResponse> resp(positions.size());
        parallel_for(positions.size(), ctx.threads, [&](std::size_t i) {
            const Coupling c = coupling(positions[i], cal.geometry);
            resp[i] = ev.response(c.g);
            num[i] = NumericEvaluator::assemble(positions[i], c, resp[i], p);
        });
        double peak_num = 0.0, peak_weak = 0.0, z_num = 0.0, z_weak = 0.0;
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const CoefficientPoint w = weak_point(positions[i], p, cal.geometry);
            const double g = coupling(positions[i], cal.geometry).g;
            t.rows.push_back({units::to_mhz(eps), units::to_nm(positions[i].z()), units::to_mhz(g), num[i].force.x(),
                num[i].force.y(), num[i].force.z(), w.force.x(), w.force.y(), w.force.z(), resp[i].n_bar, resp[i].p_e});
            if (std::abs(num[i].force.z()) > peak_num) {
                peak_num = std::abs(num[i].force.z());
                z_num = positions[i].z();
            }
            if (std::abs(w.force.z()) > peak_weak) {
                peak_weak = std::abs(w.force.z());
                z_weak = positions[i].z();
            }
        }
        peaks.push_back({{"epsilon_MHz", units::to_mhz(eps)}, {"peak_numeric_N", peak_num}, {"peak_weak_N", peak_weak},
            {"peak_ratio", peak_weak > 0 ? peak_num / peak_weak : 0.0}, {"z_peak_numeric_nm", units::to_nm(z_num)},
            {"z_peak_weak_nm", units::to_nm(z_weak)}});
    }
    detail::save_table(t, ctx, "force-sweep", "force_sweep.csv");
    nlohmann::json j = detail::summary_head(ctx, "force-sweep");
    j["g0_MHz"] = units::to_mhz(cal.geometry.g0);
    j["g_peak_law_MHz"] = units::to_mhz(peak_force_coupling(cfg.params.delta_a, cfg.params.Gamma, cfg.params.kappa));
    j["peaks"] = peaks;
    detail::save_summary(j, ctx, "force-sweep");
    return 0;
}

/// Friction and diffusion tensors along z, numeric vs weak-drive formulas.
inline int cmd_coeff_sweep(const CommandContext& ctx)
{
    const RunConfig& cfg = ctx.config;
    const CalibrationResult cal = calibrate_config(cfg);
    const auto positions = detail::sweep_positions(cfg);
    CsvTable t;
    t.header = {"epsilon_MHz", "z_nm", "g_MHz"};
    for (const auto& h : detail::mat_header("beta_"))
        t.header.push_back(h);
    for (const auto& h : detail::mat_header("Ddp_"))
        t.header.push_back(h);
    for (const char* h : {"Dse", "beta_zz_weak", "Ddp_zz_weak", "Dse_weak", "Ddp_zz_oracle"})
        t.header.push_back(h);

    nlohmann::json dev = nlohmann::json::array();
    for (double eps : cfg.sweep.epsilons) {
        SystemParams p = cfg.params;
        p.epsilon = eps;
        const NumericEvaluator ev(p);
        std::vector<CoefficientPoint> num(positions.size());
        parallel_for(positions.size(), ctx.threads, [&](std::size_t i) { num[i] = ev.at(positions[i], cal.geometry); });
        double max_b = 0, max_d = 0, err_b = 0, err_d = 0;
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const Coupling c = coupling(positions[i], cal.geometry);
            const CoefficientPoint w = weak_point(positions[i], p, cal.geometry);
            const WeakDriveContext wctx = make_weak_context(p, c.g, c.grad);
            double oracle = std::numeric_limits<double>::quiet_NaN();
            try {
                oracle = regression_oracle_diffusion(wctx, p)(2, 2);
            } catch (const RegressionInstability&) {
            }
            std::vector<double> row{units::to_mhz(eps), units::to_nm(positions[i].z()), units::to_mhz(c.g)};
            detail::append(row, num[i].beta);
            detail::append(row, num[i].d_dp);
            row.insert(row.end(), {num[i].d_se, w.beta(2, 2), w.d_dp(2, 2), w.d_se, oracle});
            t.rows.push_back(std::move(row));
            max_b = std::max(max_b, std::abs(w.beta(2, 2)));
            max_d = std::max(max_d, std::abs(w.d_dp(2, 2)));
            err_b = std::max(err_b, std::abs(num[i].beta(2, 2) - w.beta(2, 2)));
            err_d = std::max(err_d, std::abs(num[i].d_dp(2, 2) - w.d_dp(2, 2)));
        }
        dev.push_back({{"epsilon_MHz", units::to_mhz(eps)}, {"beta_zz_peak_normalized_deviation", max_b > 0 ? err_b / max_b : 0.0},
            {"Ddp_zz_peak_normalized_deviation", max_d > 0 ? err_d / max_d : 0.0}});
    }
    detail::save_table(t, ctx, "coeff-sweep", "coeff_sweep.csv");
    nlohmann::json j = detail::summary_head(ctx, "coeff-sweep");
    j["offset_nm"] = {units::to_nm(cfg.sweep.offset_x), units::to_nm(cfg.sweep.offset_y)};
    j["weak_vs_numeric"] = dev;
    detail::save_summary(j, ctx, "coeff-sweep");
    return 0;
}

/// Equilibrium-temperature maps: detuning vs height, and three planes plus a
/// z line through the trap center.
inline int cmd_teq_map(const CommandContext& ctx)
{
    const RunConfig& cfg = ctx.config;
    const CalibrationResult cal = calibrate_config(cfg);
    const auto& s = cfg.sweep;
    const TeqMap map = teq_scan_detuning_z(linspace(s.map_detuning_lo, s.map_detuning_hi, s.map_detuning_points),
        linspace(s.map_z_lo, s.map_z_hi, s.map_z_points), cfg.params, cal.geometry, ctx.threads);
    detail::save_table(map.to_csv(), ctx, "teq-map", "teq_map.csv");

    CrossSectionSpec spec;
    const EscapeRegion region = cfg.escape_region();
    spec.z_trap = cal.trap_minimum_z;
    spec.x_half = region.x_half;
    spec.y_half = region.y_half;
    spec.z_lo = std::max(region.z_min, units::nm(50.0));
    spec.z_hi = std::min(region.z_max, units::nm(600.0));
    spec.resolution = s.cross_section_resolution;
    const NumericEvaluator ev(cfg.params);
    const CrossSections cs = teq_cross_sections(
        spec, cal.geometry, [&](const Vec3& pos) { return ev.at(pos, cal.geometry); }, ctx.threads);
    detail::save_table(cs.yz.to_csv(), ctx, "teq-map", "teq_yz.csv");
    detail::save_table(cs.xy.to_csv(), ctx, "teq-map", "teq_xy.csv");
    detail::save_table(cs.xz.to_csv(), ctx, "teq-map", "teq_xz.csv");
    detail::save_table(cs.z_cut.to_csv(), ctx, "teq-map", "teq_z.csv");

    nlohmann::json j = detail::summary_head(ctx, "teq-map");
    const auto m = map.positive_minimum();
    if (m.found)
        j["map_minimum"] = {{"T_eq_uK", units::to_micro_kelvin(m.kelvin)}, {"delta_p_MHz", units::to_mhz(map.axis1[m.i1])},
            {"z_nm", units::to_nm(map.axis2[m.i2])}};
    j["coupling_minimum"] = {{"T_eq_uK", units::to_micro_kelvin(cal.teq_min)}, {"g_MHz", units::to_mhz(cal.g_star)},
        {"delta_p_MHz", units::to_mhz(cfg.params.delta_a)}};
    j["calibration"] = cal.report;
    detail::save_summary(j, ctx, "teq-map");
    return 0;
}

inline int cmd_build_grid(const CommandContext& ctx)
{
    const RunConfig& cfg = ctx.config;
    const CalibrationResult cal = calibrate_config(cfg);
    *ctx.log << cal.report;
    const GridAxes axes = cfg.grid_axes();
    *ctx.log << "building " << axes.x.size() << " x " << axes.y.size() << " x " << axes.z.size() << " coefficient grid\n";
    const CoefficientGrid grid = build_grid(axes, cfg.params, cal.geometry, cfg.grid_metadata(cal.geometry), ctx.threads,
        [&](std::size_t done, std::size_t total) {
            if (done % 20000 == 0 || done == total)
                *ctx.log << "  " << done << " / " << total << "\n";
        });
    grid.save(ctx.grid_path());
    *ctx.log << "wrote " << ctx.grid_path() << "\n";
    {
        std::ofstream rep(ctx.grid_path() + ".calibration.txt");
        rep << "# config_hash = " << cfg.hash() << "\n# version = " << version_string() << "\n" << cal.report;
    }
    nlohmann::json j = detail::summary_head(ctx, "build-grid");
    j["grid_cache"] = ctx.grid_path();
    j["points"] = axes.size();
    j["calibration"] = cal.report;
    detail::save_summary(j, ctx, "build-grid");
    return 0;
}

/// In-trap cooling ensemble with exponential fits per axis.
inline int cmd_simulate(const CommandContext& ctx, std::uint64_t seed)
{
    const RunConfig& cfg = ctx.config;
    const CalibrationResult cal = calibrate_config(cfg);
    const CoefficientGrid grid = load_grid_for(cfg, cal, ctx.grid_path());
    EnsembleConfig ec = cooling_ensemble_config(cfg, cal, seed, ctx.threads);
    ec.keep_trajectories = cfg.mc.export_trajectories > 0;
    const AtomState init = cooling_initial_state(cfg, cal);
    *ctx.log << "simulating " << ec.count << " trajectories for " << ec.trajectory.t_max * 1e3 << " ms\n";
    const EnsembleResult r = run_ensemble(ec, grid, TrapField{cal.trap}, [&](std::size_t, std::mt19937_64&) { return init; });
    const auto rates = fit_effective_friction(r.stats);

    CsvTable stats = r.stats.to_csv();
    for (int a = 0; a < 3; ++a) {
        const char* ax = a == 0 ? "x" : (a == 1 ? "y" : "z");
        stats.comments.push_back(std::string("beta_eff_over_M_") + ax + "_per_ms = " + format_double(detail::per_ms(rates[a].rate))
            + " +- " + format_double(detail::per_ms(rates[a].sigma)) + (rates[a].ok ? "" : " (fit failed)"));
    }
    detail::save_table(stats, ctx, "simulate", "simulate_ensemble.csv");
    for (std::size_t i = 0; i < std::min<std::size_t>(cfg.mc.export_trajectories, r.trajectories.size()); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "trajectory_%03zu.csv", i);
        detail::save_table(r.trajectories[i].to_csv(), ctx, "simulate", name);
    }

    // Late-time averages over the last third of the run.
    const std::size_t n = r.stats.times.size();
    std::array<double, 3> late{};
    std::size_t cnt = 0;
    for (std::size_t i = 2 * n / 3; i < n; ++i, ++cnt)
        for (int a = 0; a < 3; ++a)
            late[a] += r.stats.kinetic[a][i];
    for (auto& v : late)
        v /= double(std::max<std::size_t>(cnt, 1));

    nlohmann::json j = detail::summary_head(ctx, "simulate");
    j["seed"] = seed;
    j["trajectories"] = r.stats.n;
    j["trapped"] = r.stats.trapped;
    j["lost"] = r.stats.lost;
    j["failures"] = r.stats.failures;
    j["clamp_events"] = r.stats.clamp_events;
    j["late_kinetic_uK"] = {units::to_micro_kelvin(units::kelvin_from_energy(late[0])),
        units::to_micro_kelvin(units::kelvin_from_energy(late[1])), units::to_micro_kelvin(units::kelvin_from_energy(late[2]))};
    nlohmann::json fits = nlohmann::json::array();
    for (int a = 0; a < 3; ++a)
        fits.push_back({{"beta_eff_over_M_per_ms", detail::per_ms(rates[a].rate)}, {"sigma_per_ms", detail::per_ms(rates[a].sigma)},
            {"relaxation_time_ms", rates[a].relaxation_time * 1e3},
            {"plateau_uK", units::to_micro_kelvin(units::kelvin_from_energy(rates[a].plateau))}, {"ok", rates[a].ok}});
    j["fits_xyz"] = fits;
    j["calibration"] = cal.report;
    detail::save_summary(j, ctx, "simulate");
    return 0;
}

/// Trap probability vs asymptotic kinetic energy and its exponential fit.
inline int cmd_load_sweep(const CommandContext& ctx, std::uint64_t seed)
{
    const RunConfig& cfg = ctx.config;
    const CalibrationResult cal = calibrate_config(cfg);
    const CoefficientGrid grid = load_grid_for(cfg, cal, ctx.grid_path());
    const EnsembleConfig ec = loading_ensemble_config(cfg, cal, seed, ctx.threads);
    std::vector<double> energies;
    for (double k : cfg.mc.kinetic_energies_kelvin)
        energies.push_back(units::energy_from_kelvin(k));
    *ctx.log << "loading sweep: " << energies.size() << " energies x " << ec.count << " trajectories\n";
    const TrapProbabilityCurve curve = trap_probability_curve(energies, ec.count, ec, loading_protocol(cfg), grid, TrapField{cal.trap});
    detail::save_table(curve.to_csv(), ctx, "load-sweep", "load_sweep.csv");
    nlohmann::json j = detail::summary_head(ctx, "load-sweep");
    j["seed"] = seed;
    j["p0"] = curve.p0;
    j["p0_sigma"] = curve.p0_sigma;
    j["t_eff_uK"] = units::to_micro_kelvin(curve.t_eff);
    j["t_eff_sigma_uK"] = units::to_micro_kelvin(curve.t_eff_sigma);
    j["fit_ok"] = curve.ok;
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : curve.points)
        pts.push_back({{"Ek_uK", units::to_micro_kelvin(units::kelvin_from_energy(p.kinetic_energy))}, {"trapped", p.trapped},
            {"trials", p.trials}, {"ci95", {p.ci.lower, p.ci.upper}}});
    j["points"] = pts;
    detail::save_summary(j, ctx, "load-sweep");
    return 0;
}

/// Boltzmann-averaged loading rate from the trap-probability fit.
inline int cmd_load_rate(const CommandContext& ctx)
{
    const RunConfig& cfg = ctx.config;
    double p0 = cfg.mc.p0, t_eff = cfg.mc.t_eff_kelvin;
    std::string source = "config";
    if (!(p0 > 0.0) || !(t_eff > 0.0)) {
        const std::string file = ctx.path("load-sweep_summary.json");
        std::ifstream in(file);
        if (!in)
            throw ConfigError("no trap-probability fit: set monte_carlo.p0 and monte_carlo.t_eff, or run `cavitycool load-sweep` first ("
                + file + " not found)");
        const nlohmann::json s = nlohmann::json::parse(in);
        if (s.value("config_hash", "") != cfg.hash())
            throw ConfigError(file + " was produced with a different config (hash mismatch)");
        if (!s.value("fit_ok", false))
            throw NumericalError("the load-sweep fit in " + file + " failed; cannot compute a loading rate");
        p0 = s.at("p0").get<double>();
        t_eff = units::micro_kelvin(s.at("t_eff_uK").get<double>());
        source = file;
    }
    const double flux = cfg.mc.flux_per_ms * 1e3;
    CsvTable t;
    t.comments = {"P0 = " + format_double(p0), "T_eff_K = " + format_double(t_eff), "flux_per_ms = " + format_double(cfg.mc.flux_per_ms),
        "distribution = flux-weighted 1D Boltzmann, p(E) = exp(-E/kT)/kT"};
    t.header = {"T_uK", "rate_per_ms"};
    nlohmann::json rows = nlohmann::json::array();
    for (double temp : cfg.mc.rate_temperatures_kelvin) {
        const double rate = loading_rate(temp, flux, p0, t_eff) * 1e-3;
        t.rows.push_back({units::to_micro_kelvin(temp), rate});
        rows.push_back({{"T_uK", units::to_micro_kelvin(temp)}, {"rate_per_ms", rate}});
    }
    detail::save_table(t, ctx, "load-rate", "load_rate.csv");
    nlohmann::json j = detail::summary_head(ctx, "load-rate");
    j["fit_source"] = source;
    j["p0"] = p0;
    j["t_eff_uK"] = units::to_micro_kelvin(t_eff);
    j["rates"] = rows;
    detail::save_summary(j, ctx, "load-rate");
    return 0;
}

inline const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"steady-state", "force-sweep", "coeff-sweep", "teq-map", "build-grid",
        "simulate", "load-sweep", "load-rate"};
    return names;
}

inline int run_command(const std::string& name, const CommandContext& ctx, std::uint64_t seed)
{
    std::filesystem::create_directories(ctx.out_dir);
    if (name == "steady-state")
        return cmd_steady_state(ctx);
    if (name == "force-sweep")
        return cmd_force_sweep(ctx);
    if (name == "coeff-sweep")
        return cmd_coeff_sweep(ctx);
    if (name == "teq-map")
        return cmd_teq_map(ctx);
    if (name == "build-grid")
        return cmd_build_grid(ctx);
    if (name == "simulate")
        return cmd_simulate(ctx, seed);
    if (name == "load-sweep")
        return cmd_load_sweep(ctx, seed);
    if (name == "load-rate")
        return cmd_load_rate(ctx);
    throw ConfigError("unknown command '" + name + "'");
}

} // namespace cavitycool
