#pragma once

// Fixes the unstated mode and trap amplitudes from target positions:
//  - g0 so that the weak-drive temperature minimum along z sits at z_cool,
//  - u_blue, u_red so that U(0,0,z) has its minimum at z_trap and takes a
//    given value at the loading height z_probe.

#include "cavitycool/errors.hpp"
#include "cavitycool/fields.hpp"
#include "cavitycool/thermo.hpp"
#include "cavitycool/units.hpp"

#include <boost/math/tools/minima.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace cavitycool {

struct CalibrationTargets {
    double z_cool = units::nm(224.0);
    double z_trap = units::nm(200.0);
    double z_probe = units::nm(500.0);
    double u_probe = units::energy_from_kelvin(units::micro_kelvin(-45.0));
    double g_search_lo = units::mhz(0.5);
    double g_search_hi = units::mhz(5000.0);
};

struct CalibrationResult {
    ModeGeometry geometry;
    TrapParams trap;
    double g_star = 0.0;            // coupling minimizing T_eq, rad/s
    double teq_min = 0.0;           // K
    double trap_minimum_z = 0.0;    // m, located numerically
    double trap_minimum_u = 0.0;    // J
    double surface_barrier_u = 0.0; // J, highest point of U between the surface cutoff and the minimum
    std::string report;
};

/// Coupling strength at which the weak-drive temperature is smallest and positive.
inline double optimal_cooling_coupling(const SystemParams& params, double g_lo, double g_hi, double* t_min = nullptr)
{
    constexpr int samples = 4000;
    const double log_lo = std::log(g_lo), log_hi = std::log(g_hi);
    auto g_at = [&](int i) { return std::exp(log_lo + (log_hi - log_lo) * double(i) / double(samples - 1)); };
    auto objective = [&](double g) {
        const Temperature t = coupling_temperature(params, g);
        return (t.singular || !(t.kelvin > 0.0)) ? std::numeric_limits<double>::infinity() : t.kelvin;
    };

    int best = -1;
    double best_t = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double t = objective(g_at(i));
        if (t < best_t) {
            best_t = t;
            best = i;
        }
    }
    if (best <= 0 || best >= samples - 1) {
        std::ostringstream msg;
        msg << "no interior minimum of T_eq(g) in [" << units::to_mhz(g_lo) << ", " << units::to_mhz(g_hi)
            << "] MHz (best index " << best << ")";
        throw CalibrationError(msg.str());
    }
    const auto [g, t] = boost::math::tools::brent_find_minima(objective, g_at(best - 1), g_at(best + 1), 50);
    if (t_min)
        *t_min = t;
    return g;
}

namespace detail {
inline double potential_on_axis(const TrapParams& trap, double z) { return trap_potential(Vec3(0, 0, z), trap).value; }
} // namespace detail

inline CalibrationResult calibrate(const CalibrationTargets& targets, const SystemParams& params,
    const ModeGeometry& geometry_template, const TrapParams& trap_template)
{
    CalibrationResult out;

    // Mode coupling.
    out.g_star = optimal_cooling_coupling(params, targets.g_search_lo, targets.g_search_hi, &out.teq_min);
    out.geometry = geometry_template;
    out.geometry.g0 = out.g_star * std::exp(targets.z_cool / geometry_template.d_len);
    out.geometry.validate();

    // Trap amplitudes: dU/dz(z_trap) = 0 and U(z_probe) = u_probe, linear in (u_blue, u_red).
    TrapParams unit_blue = trap_template, unit_red = trap_template;
    unit_blue.u_blue = 1.0;
    unit_blue.u_red = 0.0;
    unit_blue.c4 = trap_template.c4;
    unit_red.u_blue = 0.0;
    unit_red.u_red = 1.0;
    trap_template.validate_shape();
    TrapParams cp_only = trap_template;
    cp_only.u_blue = cp_only.u_red = 0.0;
    const Vec3 at_trap(0, 0, targets.z_trap), at_probe(0, 0, targets.z_probe);
    auto without_cp = [&](const TrapParams& t, const Vec3& pos) {
        const Potential u = trap_potential(pos, t);
        const Potential cp = trap_potential(pos, cp_only);
        return Potential{u.value - cp.value, u.grad - cp.grad};
    };
    Eigen::Matrix2d m;
    m << without_cp(unit_blue, at_trap).grad.z(), without_cp(unit_red, at_trap).grad.z(),
        without_cp(unit_blue, at_probe).value, without_cp(unit_red, at_probe).value;
    const Eigen::Vector2d rhs(-trap_potential(at_trap, cp_only).grad.z(), targets.u_probe - trap_potential(at_probe, cp_only).value);
    const Eigen::Vector2d amp = m.fullPivLu().solve(rhs);
    out.trap = trap_template;
    out.trap.u_blue = amp(0);
    out.trap.u_red = amp(1);
    if (!(out.trap.u_blue > 0.0) || !(out.trap.u_red < 0.0)) {
        std::ostringstream msg;
        msg << "trap calibration produced u_blue=" << out.trap.u_blue << " J, u_red=" << out.trap.u_red
            << " J; adjust the decay lengths or targets";
        throw CalibrationError(msg.str());
    }

    // Locate the minimum on (50, 500) nm and check it is unique.
    const double z_scan_lo = units::nm(50.0), z_scan_hi = units::nm(500.0);
    constexpr int n = 4501;
    int minima = 0;
    double prev2 = detail::potential_on_axis(out.trap, z_scan_lo);
    double prev1 = detail::potential_on_axis(out.trap, z_scan_lo + (z_scan_hi - z_scan_lo) / (n - 1));
    for (int i = 2; i < n; ++i) {
        const double z = z_scan_lo + (z_scan_hi - z_scan_lo) * double(i) / (n - 1);
        const double u = detail::potential_on_axis(out.trap, z);
        if (prev1 < prev2 && prev1 <= u)
            ++minima;
        prev2 = prev1;
        prev1 = u;
    }
    // Brent's stopping rule has an absolute term of order 1e-8 in x, so search in nm.
    const auto [zmin_nm, umin] = boost::math::tools::brent_find_minima(
        [&](double z_nm) { return detail::potential_on_axis(out.trap, units::nm(z_nm)); },
        units::to_nm(targets.z_trap) - 50.0, units::to_nm(targets.z_trap) + 50.0, 50);
    const double zmin = units::nm(zmin_nm);
    out.trap_minimum_z = zmin;
    out.trap_minimum_u = umin;
    if (minima != 1 || std::abs(zmin - targets.z_trap) > units::nm(0.5)) {
        std::ostringstream msg;
        msg << "trap potential has " << minima << " minima on (50, 500) nm; refined minimum at "
            << units::to_nm(zmin) << " nm (u_blue = " << out.trap.u_blue << " J, u_red = " << out.trap.u_red << " J)";
        throw CalibrationError(msg.str());
    }
    out.surface_barrier_u = -std::numeric_limits<double>::infinity();
    for (double z = units::nm(25.0); z < zmin; z += units::nm(0.25))
        out.surface_barrier_u = std::max(out.surface_barrier_u, detail::potential_on_axis(out.trap, z));

    std::ostringstream r;
    r << std::setprecision(10);
    r << "[calibration]\n"
      << "g_star_MHz = " << units::to_mhz(out.g_star) << "\n"
      << "teq_min_uK = " << units::to_micro_kelvin(out.teq_min) << "\n"
      << "z_cool_nm = " << units::to_nm(targets.z_cool) << "\n"
      << "g0_MHz = " << units::to_mhz(out.geometry.g0) << "\n"
      << "d_nm = " << units::to_nm(out.geometry.d_len) << "\n"
      << "k_ax_per_um = " << out.geometry.k_ax * 1e-6 << "\n"
      << "q_nm = " << units::to_nm(out.geometry.q_len) << "\n"
      << "u_blue_mK = " << units::kelvin_from_energy(out.trap.u_blue) * 1e3 << "\n"
      << "u_red_mK = " << units::kelvin_from_energy(out.trap.u_red) * 1e3 << "\n"
      << "d_blue_nm = " << units::to_nm(out.trap.d_blue) << "\n"
      << "d_red_nm = " << units::to_nm(out.trap.d_red) << "\n"
      << "trap_minimum_nm = " << units::to_nm(out.trap_minimum_z) << "\n"
      << "trap_minimum_mK = " << units::kelvin_from_energy(out.trap_minimum_u) * 1e3 << "\n"
      << "surface_barrier_mK = " << units::kelvin_from_energy(out.surface_barrier_u) * 1e3 << "\n"
      << "u_probe_uK = " << units::to_micro_kelvin(units::kelvin_from_energy(detail::potential_on_axis(out.trap, targets.z_probe))) << "\n";
    out.report = r.str();
    return out;
}

} // namespace cavitycool
