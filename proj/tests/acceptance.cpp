// Acceptance driver: one PASS/FAIL line per criterion, at the stated tolerance.
// Reference values are written out here; closed forms are re-derived locally
// where that is practical.

#include "cavitycool/commands.hpp"

#include <CLI11.hpp>

#include <boost/math/tools/minima.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>

using namespace cavitycool;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what)
    {
        pass = pass && ok;
        detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [miss]");
    }
};

std::string fmt(double v, int prec = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return buf;
}

struct Setup {
    RunConfig cfg;
    CalibrationResult cal;
    std::string cache_dir;
    unsigned threads = 0;
    std::uint64_t seed = 1;
};

// ---------------------------------------------------------------- 1

double diffusion_closed_form(const SystemParams& p, double g)
{
    const double re = p.Gamma * p.kappa + g * g - p.delta_a * p.delta_c;
    const double im = p.delta_c * p.Gamma + p.delta_a * p.kappa;
    const double q2 = re * re + im * im;
    return constants::hbar * constants::hbar * p.epsilon * p.epsilon * p.Gamma / q2
        * (1.0 + 4.0 * p.delta_a * g * g * im / (p.Gamma * q2));
}

void oracle_equivalence(const Setup&, Verdict& v)
{
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int unstable = 0;
    for (int i = 0; i < 1000; ++i) {
        SystemParams p;
        p.kappa = units::mhz(1.0 + 300.0 * u(rng));
        p.Gamma = units::mhz(0.5 + 20.0 * u(rng));
        p.delta_a = units::mhz(-100.0 + 200.0 * u(rng));
        p.delta_c = units::mhz(-100.0 + 200.0 * u(rng));
        p.epsilon = units::mhz(0.01 + 5.0 * u(rng));
        p.k_photon = constants::two_pi / 852e-9;
        p.mass = constants::cesium_mass;
        const double g = units::mhz(0.1 + 200.0 * u(rng));
        try {
            const double oracle = regression_oracle_diffusion(make_weak_context(p, g, Vec3(0, 0, 1)), p)(2, 2);
            const double closed = diffusion_closed_form(p, g);
            // guard against a near-cancelling bracket
            const double scale = constants::hbar * constants::hbar * p.epsilon * p.epsilon * p.Gamma
                / make_weak_context(p, g, Vec3::Zero()).q_abs2();
            worst = std::max(worst, std::abs(oracle - closed) / std::max(std::abs(closed), scale));
        } catch (const RegressionInstability&) {
            ++unstable;
        }
    }
    v.check(worst <= 1e-8, "max rel err " + fmt(worst) + " (<= 1e-8)");
    v.check(unstable == 0, std::to_string(unstable) + " unstable draws");
}

// ---------------------------------------------------------------- 2, 3, 4

struct AxisSweep {
    std::vector<double> z, f_num, f_weak, b_num, b_weak, d_num, d_weak;
};

AxisSweep sweep_axis(const Setup& s, double epsilon, int n_max, std::size_t points, bool numeric = true)
{
    SystemParams p = s.cfg.params;
    p.epsilon = epsilon;
    p.n_max = n_max;
    AxisSweep out;
    out.z = linspace(s.cfg.sweep.z_lo, s.cfg.sweep.z_hi, points);
    const std::size_t n = out.z.size();
    for (auto* v : {&out.f_num, &out.f_weak, &out.b_num, &out.b_weak, &out.d_num, &out.d_weak})
        v->assign(n, 0.0);
    const NumericEvaluator ev(p);
    parallel_for(n, s.threads, [&](std::size_t i) {
        const Vec3 pos(0.0, 0.0, out.z[i]);
        const Coupling c = coupling(pos, s.cal.geometry);
        const WeakDriveContext ctx = make_weak_context(p, c.g, c.grad);
        // local closed forms for force and dipole diffusion
        const double re = p.Gamma * p.kappa + c.g * c.g - p.delta_a * p.delta_c;
        const double im = p.delta_c * p.Gamma + p.delta_a * p.kappa;
        out.f_weak[i] = -p.epsilon * p.epsilon / (re * re + im * im) * constants::hbar * 2.0 * c.g * p.delta_a * c.grad.z();
        out.d_weak[i] = diffusion_closed_form(p, c.g) * c.grad.z() * c.grad.z();
        out.b_weak[i] = friction_weak(ctx, p)(2, 2);
        if (numeric) {
            const CoefficientPoint pt = ev.at(pos, s.cal.geometry);
            out.f_num[i] = pt.force.z();
            out.b_num[i] = pt.beta(2, 2);
            out.d_num[i] = pt.d_dp(2, 2);
        }
    });
    return out;
}

double peak_normalized_error(const std::vector<double>& a, const std::vector<double>& ref)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - ref[i]));
        den = std::max(den, std::abs(ref[i]));
    }
    return num / den;
}

double peak_abs(const std::vector<double>& a)
{
    double m = 0.0;
    for (double x : a)
        m = std::max(m, std::abs(x));
    return m;
}

void weak_numeric_consistency(const Setup& s, Verdict& v)
{
    for (auto [eps_mhz, tol] : {std::pair{0.1, 1e-3}, std::pair{5.0, 3e-2}}) {
        const AxisSweep sw = sweep_axis(s, units::mhz(eps_mhz), s.cfg.params.n_max, 100);
        const double ef = peak_normalized_error(sw.f_num, sw.f_weak);
        const double eb = peak_normalized_error(sw.b_num, sw.b_weak);
        const double ed = peak_normalized_error(sw.d_num, sw.d_weak);
        const std::string tag = "eps=" + fmt(eps_mhz) + "MHz ";
        v.check(ef <= tol, tag + "F_z " + fmt(ef, 3));
        v.check(eb <= tol, tag + "beta_zz " + fmt(eb, 3));
        v.check(ed <= tol, tag + "D_zz " + fmt(ed, 3));
    }
    v.detail << " (peak-normalized, tol 0.1% / 3%)";
}

void saturation(const Setup& s, Verdict& v)
{
    for (auto [eps_mhz, target] : {std::pair{10.0, 0.9}, std::pair{25.0, 0.5}}) {
        const AxisSweep sw = sweep_axis(s, units::mhz(eps_mhz), s.cfg.params.n_max, 501);
        const double ratio = peak_abs(sw.f_num) / peak_abs(sw.f_weak);
        v.check(std::abs(ratio - target) <= 0.05, "eps=" + fmt(eps_mhz) + "MHz ratio " + fmt(ratio, 3) + " (" + fmt(target) + " +- 0.05)");
        const AxisSweep lo = sweep_axis(s, units::mhz(eps_mhz), 3, 501);
        const double change = std::abs(peak_abs(lo.f_num) / peak_abs(sw.f_num) - 1.0);
        v.check(change < 0.01, "n_max 3 vs 4 peak change " + fmt(change, 2));
    }
}

void peak_position(const Setup& s, Verdict& v)
{
    const SystemParams& p = s.cfg.params;
    const double law = std::pow((p.delta_a * p.delta_a + p.Gamma * p.Gamma) * (p.delta_a * p.delta_a + p.kappa * p.kappa), 0.25);
    const AxisSweep sw = sweep_axis(s, p.epsilon, p.n_max, 1001, false);
    std::size_t best = 0;
    for (std::size_t i = 1; i < sw.z.size(); ++i)
        if (std::abs(sw.f_weak[i]) > std::abs(sw.f_weak[best]))
            best = i;
    auto neg_force = [&](double z_nm) {
        const Coupling c = coupling(Vec3(0, 0, units::nm(z_nm)), s.cal.geometry);
        return -std::abs(force_weak(make_weak_context(p, c.g, c.grad), p).z());
    };
    const double lo = units::to_nm(sw.z[best > 0 ? best - 1 : 0]), hi = units::to_nm(sw.z[std::min(best + 1, sw.z.size() - 1)]);
    const double z_star = boost::math::tools::brent_find_minima(neg_force, lo, hi, 50).first;
    const double g_star = coupling(Vec3(0, 0, units::nm(z_star)), s.cal.geometry).g;
    const double err = std::abs(g_star / law - 1.0);
    v.check(err <= 0.01, "argmax z " + fmt(z_star, 5) + " nm, g " + fmt(units::to_mhz(g_star), 5) + " MHz vs law "
            + fmt(units::to_mhz(law), 5) + " MHz (rel " + fmt(err, 2) + ")");
}

// ---------------------------------------------------------------- 5

void equilibrium_temperature(const Setup& s, Verdict& v)
{
    const SystemParams& p = s.cfg.params;
    auto t_of = [&](double log_g) {
        const Temperature t = coupling_temperature(p, std::exp(log_g));
        return t.kelvin > 0.0 ? t.kelvin : 1.0;
    };
    // coarse bracket then Brent
    double best_lg = 0.0, best_t = 1e300;
    for (int i = 0; i <= 2000; ++i) {
        const double lg = std::log(units::mhz(1.0)) + (std::log(1000.0)) * i / 2000.0;
        if (t_of(lg) < best_t) {
            best_t = t_of(lg);
            best_lg = lg;
        }
    }
    const double step = std::log(1000.0) / 2000.0;
    const double t_min = boost::math::tools::brent_find_minima(t_of, best_lg - step, best_lg + step, 50).second;
    v.check(std::abs(units::to_micro_kelvin(t_min) - 324.0) <= 10.0, "min_g T_eq " + fmt(units::to_micro_kelvin(t_min)) + " uK (324 +- 10)");

    const auto& sw = s.cfg.sweep;
    const auto det = linspace(sw.map_detuning_lo, sw.map_detuning_hi, sw.map_detuning_points);
    const auto zs = linspace(sw.map_z_lo, sw.map_z_hi, sw.map_z_points);
    const TeqMap map = teq_scan_detuning_z(det, zs, p, s.cal.geometry, s.threads);
    const TeqMap::Minimum m = map.positive_minimum();
    const double t_uK = units::to_micro_kelvin(m.kelvin), z_nm = units::to_nm(map.axis2[m.i2]);
    v.check(m.found && std::abs(t_uK / 200.0 - 1.0) <= 0.15, "scan min " + fmt(t_uK) + " uK (200 +- 15%)");
    v.check(std::abs(z_nm - 292.0) <= 15.0, "at z " + fmt(z_nm) + " nm, dp " + fmt(units::to_mhz(map.axis1[m.i1])) + " MHz (292 +- 15 nm)");

    SystemParams p10 = p;
    p10.epsilon *= 10.0;
    const TeqMap map10 = teq_scan_detuning_z(det, zs, p10, s.cal.geometry, s.threads);
    bool identical = map10.kelvin.size() == map.kelvin.size();
    for (std::size_t k = 0; identical && k < map.kelvin.size(); ++k)
        identical = std::memcmp(&map.kelvin[k], &map10.kelvin[k], sizeof(double)) == 0;
    v.check(identical, std::string("eps -> 10 eps bit-identical: ") + (identical ? "yes" : "no"));
}

// ---------------------------------------------------------------- 6

void ou_thermalization(const Setup& s, Verdict& v)
{
    const double mass = s.cfg.params.mass;
    const Mat3 rot = Eigen::AngleAxisd(0.6, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    const Vec3 rates(1.5e3, 3e3, 6e3);          // 1/s
    const Vec3 temps(150e-6, 300e-6, 600e-6);   // K
    CoefficientPoint pt;
    pt.beta = -mass * rot * rates.asDiagonal() * rot.transpose();
    Vec3 d;
    for (int i = 0; i < 3; ++i)
        d(i) = mass * rates(i) * units::energy_from_kelvin(temps(i));
    pt.d_dp = rot * d.asDiagonal() * rot.transpose();
    const UniformCoefficients field{pt};

    EnsembleConfig ec;
    ec.trajectory.step.mass = mass;
    ec.trajectory.step.dt = 1e-6;
    ec.trajectory.t_max = 12e-3;
    ec.trajectory.sample_stride = 20;
    ec.trajectory.region = EscapeRegion{1e3, 1e3, 1e-9, 1e3};
    ec.count = 400;
    ec.master_seed = s.seed;
    ec.threads = s.threads;
    const EnsembleResult r = run_ensemble(ec, field, FreeSpace{}, [](std::size_t, std::mt19937_64&) {
        AtomState a;
        a.position = Vec3(0, 0, 1.0);
        return a;
    });
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < r.stats.times.size(); ++i)
        if (r.stats.times[i] >= 3e-3) {
            sum += 2.0 * (r.stats.kinetic[0][i] + r.stats.kinetic[1][i] + r.stats.kinetic[2][i]) / mass;
            ++n;
        }
    const double measured = sum / double(n);
    const double expected = -(pt.d_total() * pt.beta.inverse()).trace() / mass;
    const double err = std::abs(measured / expected - 1.0);
    v.check(err <= 0.05, "<v^2> " + fmt(measured) + " vs -Tr(D beta^-1)/M " + fmt(expected) + " m^2/s^2 (rel " + fmt(err, 2) + ", <= 5%)");
}

// ---------------------------------------------------------------- 7, 8

CoefficientGrid cached_grid(const Setup& s)
{
    std::filesystem::create_directories(s.cache_dir);
    const std::string path = (std::filesystem::path(s.cache_dir) / "grid.bin").string();
    const nlohmann::json meta = s.cfg.grid_metadata(s.cal.geometry);
    if (std::filesystem::exists(path)) {
        try {
            return CoefficientGrid::load(path, meta);
        } catch (const ConfigError& e) {
            std::cerr << "rebuilding grid: " << e.what() << "\n";
        }
    }
    std::cerr << "building coefficient grid (" << s.cfg.grid_axes().size() << " points) into " << path << "\n";
    const CoefficientGrid grid = build_grid(s.cfg.grid_axes(), s.cfg.params, s.cal.geometry, meta, s.threads);
    grid.save(path);
    return grid;
}

bool within_factor(double value, double reference, double factor)
{
    const double r = value / reference;
    return r >= 1.0 / factor && r <= factor;
}

void in_trap_cooling(const Setup& s, const CoefficientGrid& grid, Verdict& v)
{
    const EnsembleConfig ec = cooling_ensemble_config(s.cfg, s.cal, s.seed, s.threads);
    const AtomState init = cooling_initial_state(s.cfg, s.cal);
    const EnsembleResult r = run_ensemble(ec, grid, TrapField{s.cal.trap}, [&](std::size_t, std::mt19937_64&) { return init; });
    const auto fits = fit_effective_friction(r.stats);

    const std::size_t n = r.stats.times.size();
    double late = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 2 * n / 3; i < n; ++i, ++cnt)
        late += r.stats.kinetic[2][i];
    late /= double(cnt);
    const double target = 0.5 * units::energy_from_kelvin(324e-6);
    v.check(std::abs(late / target - 1.0) <= 0.30, "late E_kz " + fmt(late / target, 3) + " x kB*324uK/2 (+-30%)");
    v.check(fits[2].ok && within_factor(fits[2].relaxation_time, 0.6e-3, 2.0),
        "relaxation time z " + fmt(fits[2].relaxation_time * 1e3, 3) + " ms (0.6 ms, x2)");
    const double reference[3] = {-0.51, -0.41, -1.48};
    const char* axis = "xyz";
    for (int a = 0; a < 3; ++a) {
        const double per_ms = fits[a].rate * 1e-3;
        v.check(fits[a].ok && within_factor(per_ms, reference[a], 2.0),
            std::string("beta_eff/M ") + axis[a] + " " + fmt(per_ms, 3) + "/ms (" + fmt(reference[a]) + ", x2)");
    }
    v.check(r.stats.failures == 0, std::to_string(r.stats.failures) + " failed trajectories");
}

void loading(const Setup& s, const CoefficientGrid& grid, Verdict& v)
{
    EnsembleConfig ec = loading_ensemble_config(s.cfg, s.cal, s.seed, s.threads);
    LoadingProtocol lp = loading_protocol(s.cfg);
    lp.kinetic_at_infinity = units::energy_from_kelvin(6e-6);
    ec.count = 500;
    const TrapField trap{s.cal.trap};
    const EnsembleResult r = run_ensemble(ec, grid, trap, [&](std::size_t, std::mt19937_64& rng) {
        return loading_initial_state(lp, trap, ec.trajectory.step.mass, rng);
    });
    const double frac = r.stats.trapped_fraction;
    v.check(frac >= 0.03 && frac <= 0.10, "6 uK: " + std::to_string(r.stats.trapped) + "/500 = " + fmt(frac, 3) + " ([0.03, 0.10]; CI "
            + fmt(r.stats.trapped_ci.lower, 3) + "-" + fmt(r.stats.trapped_ci.upper, 3) + ")");

    EnsembleConfig sweep = loading_ensemble_config(s.cfg, s.cal, s.seed, s.threads);
    sweep.stream_offset = 1000000; // independent of the 500-trajectory run
    std::vector<double> energies;
    for (double k : s.cfg.mc.kinetic_energies_kelvin)
        energies.push_back(units::energy_from_kelvin(k));
    const TrapProbabilityCurve curve = trap_probability_curve(energies, sweep.count, sweep, loading_protocol(s.cfg), grid, trap);
    v.check(curve.ok && within_factor(curve.p0, 0.053, 2.0), "P0 " + fmt(curve.p0, 3) + " (0.053, x2)");
    v.check(curve.ok && within_factor(curve.t_eff, 57e-6, 2.0), "T_eff " + fmt(units::to_micro_kelvin(curve.t_eff), 3) + " uK (57, x2)");
    const double rate = curve.ok ? loading_rate(40e-6, 400e3, curve.p0, curve.t_eff) * 1e-3 : 0.0;
    v.check(rate >= 8.0, "rate(40 uK, 400/ms) " + fmt(rate, 3) + "/ms (>= 8)");
}

// ---------------------------------------------------------------- 9

void structural(const Setup& s, Verdict& v)
{
    // steady states
    double herm = 0.0, trace = 0.0, neg = 0.0;
    SystemParams p = s.cfg.params;
    for (double g_mhz : {0.0, 10.0, 62.5, 300.0})
        for (double eps : {0.1, 10.0, 25.0}) {
            p.epsilon = units::mhz(eps);
            const DensityMatrix rho = steady_state(build_liouvillian(p, units::mhz(g_mhz)));
            herm = std::max(herm, (rho.entries - rho.entries.adjoint()).norm());
            trace = std::max(trace, std::abs(rho.entries.trace() - 1.0));
            const Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (rho.entries + rho.entries.adjoint()));
            neg = std::min(neg, es.eigenvalues().minCoeff());
        }
    v.check(herm < 1e-10 && trace < 1e-10 && neg > -1e-10,
        "rho: |rho - rho^+| " + fmt(herm, 2) + ", |tr - 1| " + fmt(trace, 2) + ", min eig " + fmt(neg, 2));

    // rank-1 tensors
    const Vec3 pos(35e-9, -80e-9, 240e-9);
    const CoefficientPoint pt = NumericEvaluator(s.cfg.params).at(pos, s.cal.geometry);
    const Vec3 n = coupling(pos, s.cal.geometry).grad.normalized();
    const Mat3 proj = n * n.transpose();
    const double rb = (pt.beta - proj * pt.beta * proj).norm() / pt.beta.norm();
    const double rd = (pt.d_dp - proj * pt.d_dp * proj).norm() / pt.d_dp.norm();
    v.check(rb < 1e-12 && rd < 1e-12, "rank-1 residual beta " + fmt(rb, 2) + ", D " + fmt(rd, 2));

    // gradients
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> xy(-400e-9, 400e-9), zz(30e-9, 700e-9);
    double worst_g = 0.0, worst_u = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Vec3 q(xy(rng), xy(rng), zz(rng));
        Vec3 fg, fu;
        for (int k = 0; k < 3; ++k) {
            Vec3 a = q, b = q;
            a(k) += 1e-11;
            b(k) -= 1e-11;
            fg(k) = (coupling(a, s.cal.geometry).g - coupling(b, s.cal.geometry).g) / 2e-11;
            fu(k) = (trap_potential(a, s.cal.trap).value - trap_potential(b, s.cal.trap).value) / 2e-11;
        }
        const Vec3 ag = coupling(q, s.cal.geometry).grad, au = trap_potential(q, s.cal.trap).grad;
        worst_g = std::max(worst_g, (fg - ag).norm() / std::max(ag.norm(), 1e-9 * s.cal.geometry.g0 / s.cal.geometry.d_len));
        worst_u = std::max(worst_u, (fu - au).norm() / au.norm());
    }
    v.check(worst_g < 1e-6 && worst_u < 1e-6, "FD gradient rel err g " + fmt(worst_g, 2) + ", U " + fmt(worst_u, 2));

    // seeded reproducibility across thread counts
    CoefficientPoint c;
    c.beta = -s.cfg.params.mass * 2e3 * Mat3::Identity();
    c.d_dp = s.cfg.params.mass * 2e3 * units::energy_from_kelvin(1e-4) * Mat3::Identity();
    EnsembleConfig ec;
    ec.trajectory.step.mass = s.cfg.params.mass;
    ec.trajectory.t_max = 20e-6;
    ec.trajectory.region = EscapeRegion{1.0, 1.0, 1e-9, 1.0};
    ec.count = 16;
    ec.master_seed = 77;
    auto sampler = [](std::size_t, std::mt19937_64& r) {
        AtomState a;
        a.position = Vec3(0, 0, 0.5);
        a.velocity = Vec3(std::normal_distribution<double>(0, 0.1)(r), 0, 0);
        return a;
    };
    ec.threads = 1;
    const EnsembleResult r1 = run_ensemble(ec, UniformCoefficients{c}, FreeSpace{}, sampler);
    ec.threads = 4;
    const EnsembleResult r4 = run_ensemble(ec, UniformCoefficients{c}, FreeSpace{}, sampler);
    const bool same = r1.stats.kinetic == r4.stats.kinetic && r1.stats.total == r4.stats.total;
    v.check(same, std::string("ensemble bitwise identical for 1 and 4 threads: ") + (same ? "yes" : "no"));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cavitycool acceptance criteria"};
    std::string cache_dir = "acceptance_cache";
    std::string config_path;
    std::set<int> only;
    unsigned threads = 0;
    std::uint64_t seed = 1;
    app.add_option("--cache-dir", cache_dir, "where the coefficient grid is kept between runs");
    app.add_option("--config", config_path, "config file (default: built-in reference values)");
    app.add_option("--only", only, "run only these criteria (1-9)");
    app.add_option("--threads", threads, "worker threads, 0 = all cores");
    app.add_option("--seed", seed, "master seed for the stochastic criteria");
    CLI11_PARSE(app, argc, argv);

    Setup s;
    s.cfg = config_path.empty() ? parse_config_json(nlohmann::json::object()) : parse_config(config_path);
    s.cal = calibrate_config(s.cfg);
    s.cache_dir = cache_dir;
    s.threads = threads;
    s.seed = seed;

    std::optional<CoefficientGrid> grid;
    auto need_grid = [&]() -> const CoefficientGrid& {
        if (!grid)
            grid = cached_grid(s);
        return *grid;
    };

    struct Criterion {
        int id;
        const char* name;
        std::function<void(Verdict&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", [&](Verdict& v) { oracle_equivalence(s, v); }},
        {2, "weak/numeric consistency", [&](Verdict& v) { weak_numeric_consistency(s, v); }},
        {3, "saturation", [&](Verdict& v) { saturation(s, v); }},
        {4, "peak-position law", [&](Verdict& v) { peak_position(s, v); }},
        {5, "equilibrium temperature", [&](Verdict& v) { equilibrium_temperature(s, v); }},
        {6, "OU thermalization", [&](Verdict& v) { ou_thermalization(s, v); }},
        {7, "in-trap cooling", [&](Verdict& v) { in_trap_cooling(s, need_grid(), v); }},
        {8, "loading probability", [&](Verdict& v) { loading(s, need_grid(), v); }},
        {9, "structural properties", [&](Verdict& v) { structural(s, v); }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id))
            continue;
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(v);
        } catch (const std::exception& e) {
            v.check(false, std::string("error: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += v.pass ? 0 : 1;
        std::cout << "criterion " << c.id << " (" << c.name << "): " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail.str()
                  << "  [" << fmt(secs, 3) << " s]" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
