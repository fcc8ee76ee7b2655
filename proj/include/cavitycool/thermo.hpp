#pragma once

// Local equilibrium temperature from friction and diffusion tensors, and the
// detuning/position scans and cross-section maps built on it.

#include "cavitycool/coefficients.hpp"
#include "cavitycool/csv.hpp"
#include "cavitycool/fields.hpp"
#include "cavitycool/parallel.hpp"
#include "cavitycool/units.hpp"
#include "cavitycool/weak_drive.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace cavitycool {

struct Temperature {
    double kelvin = std::numeric_limits<double>::quiet_NaN(); // signed; negative means heating friction
    bool singular = false;
};

/// k_B T = -Tr(D beta^-1) / 3. Flags beta with condition number >= 1e12.
inline Temperature teq(const Mat3& beta, const Mat3& d_total)
{
    const Eigen::JacobiSVD<Mat3> svd(beta);
    const auto& s = svd.singularValues();
    if (!(s(2) > 0.0) || s(0) / s(2) >= 1e12)
        return Temperature{std::numeric_limits<double>::quiet_NaN(), true};
    const double kt = -(d_total * beta.inverse()).trace() / 3.0;
    return Temperature{units::kelvin_from_energy(kt), false};
}

/// One-dimensional reduction along the unit vector n: k_B T = -(n.D.n)/(n.beta.n).
inline Temperature teq_along(const Mat3& beta, const Mat3& d, const Vec3& n)
{
    const double b = n.dot(beta * n);
    if (b == 0.0 || !std::isfinite(b))
        return Temperature{std::numeric_limits<double>::quiet_NaN(), true};
    return Temperature{units::kelvin_from_energy(-n.dot(d * n) / b), false};
}

/// Weak-drive temperature as a function of the coupling alone, from the
/// dipole diffusion and friction prefactors. The pump rate cancels; it is
/// fixed to one internally so the result is bitwise independent of epsilon.
inline Temperature coupling_temperature(SystemParams params, double g)
{
    params.epsilon = 1.0;
    const WeakDriveContext ctx = make_weak_context(params, g, Vec3::Zero());
    const double b = friction_weak_prefactor(ctx, params);
    if (b == 0.0 || !std::isfinite(b))
        return Temperature{std::numeric_limits<double>::quiet_NaN(), true};
    const double d = constants::hbar * constants::hbar * diffusion_weak_prefactor(ctx, params);
    return Temperature{units::kelvin_from_energy(-d / b), false};
}

struct TeqMap {
    std::string axis1_name; // CSV header for axis 1, unit included
    std::string axis2_name;
    double axis1_scale = 1.0; // CSV value = SI value * scale
    double axis2_scale = 1.0;
    std::vector<double> axis1, axis2; // SI
    std::vector<double> kelvin;       // axis1-major, size n1*n2
    std::vector<int> flags;           // 1 where the estimate is singular
    std::vector<Mat3> beta;
    std::vector<Mat3> d_total;

    std::size_t index(std::size_t i1, std::size_t i2) const { return i1 * axis2.size() + i2; }

    void resize()
    {
        const std::size_t n = axis1.size() * axis2.size();
        kelvin.assign(n, std::numeric_limits<double>::quiet_NaN());
        flags.assign(n, 0);
        beta.assign(n, Mat3::Zero());
        d_total.assign(n, Mat3::Zero());
    }

    /// Smallest positive (cooling) temperature and where it occurs.
    struct Minimum {
        double kelvin = std::numeric_limits<double>::infinity();
        std::size_t i1 = 0, i2 = 0;
        bool found = false;
    };

    Minimum positive_minimum() const
    {
        Minimum m;
        for (std::size_t i1 = 0; i1 < axis1.size(); ++i1)
            for (std::size_t i2 = 0; i2 < axis2.size(); ++i2) {
                const std::size_t k = index(i1, i2);
                if (flags[k] == 0 && kelvin[k] > 0.0 && kelvin[k] < m.kelvin)
                    m = Minimum{kelvin[k], i1, i2, true};
            }
        return m;
    }

    CsvTable to_csv() const
    {
        CsvTable t;
        t.header = {axis1_name, axis2_name, "T_eq_K"};
        for (const char* prefix : {"beta_", "D_"})
            for (const char* a : {"x", "y", "z"})
                for (const char* b : {"x", "y", "z"})
                    t.header.push_back(std::string(prefix) + a + b);
        t.header.push_back("flag");
        for (std::size_t i1 = 0; i1 < axis1.size(); ++i1)
            for (std::size_t i2 = 0; i2 < axis2.size(); ++i2) {
                const std::size_t k = index(i1, i2);
                std::vector<double> row{axis1[i1] * axis1_scale, axis2[i2] * axis2_scale, kelvin[k]};
                for (const Mat3* m : {&beta[k], &d_total[k]})
                    for (int r = 0; r < 3; ++r)
                        for (int c = 0; c < 3; ++c)
                            row.push_back((*m)(r, c));
                row.push_back(flags[k]);
                t.rows.push_back(std::move(row));
            }
        return t;
    }
};

/// T_eq over (pump detuning, height z) on the axis (0,0,z) with
/// Delta_a = Delta_c = Delta_p. Temperatures use the epsilon-free weak
/// formulas; the companion beta and D maps are at the configured pump rate.
inline TeqMap teq_scan_detuning_z(const std::vector<double>& detunings, const std::vector<double>& heights,
    const SystemParams& params, const ModeGeometry& geom, unsigned threads = 1)
{
    TeqMap map;
    map.axis1_name = "delta_p_MHz";
    map.axis2_name = "z_nm";
    map.axis1_scale = 1.0 / units::mhz(1.0);
    map.axis2_scale = 1e9;
    map.axis1 = detunings;
    map.axis2 = heights;
    map.resize();
    parallel_for(detunings.size(), threads, [&](std::size_t i1) {
        SystemParams p = params;
        p.delta_a = p.delta_c = detunings[i1];
        for (std::size_t i2 = 0; i2 < heights.size(); ++i2) {
            const std::size_t k = map.index(i1, i2);
            const Vec3 pos(0.0, 0.0, heights[i2]);
            const CoefficientPoint pt = weak_point(pos, p, geom);
            map.beta[k] = pt.beta;
            map.d_total[k] = pt.d_total();
            const Temperature t = coupling_temperature(p, coupling(pos, geom).g);
            map.kelvin[k] = t.kelvin;
            map.flags[k] = t.singular ? 1 : 0;
        }
    });
    return map;
}

/// Per-position temperature estimate from a coefficient point: the friction
/// tensor is rank one along grad g, so the estimate is the reduction onto
/// that direction. D_SE is left out unless requested.
inline Temperature point_temperature(const CoefficientPoint& pt, const Vec3& grad_g, bool include_spontaneous = false)
{
    const double norm = grad_g.norm();
    if (!(norm > 0.0))
        return Temperature{std::numeric_limits<double>::quiet_NaN(), true};
    const Mat3 d = include_spontaneous ? pt.d_total() : pt.d_dp;
    return teq_along(pt.beta, d, grad_g / norm);
}

struct CrossSections {
    TeqMap yz; // x = 0
    TeqMap xy; // z = z_t
    TeqMap xz; // y = 0
    TeqMap z_cut; // (0, 0, z); axis1 holds the single value x = 0
};

struct CrossSectionSpec {
    double z_trap = 0.0;
    double x_half = 0.0;
    double y_half = 0.0;
    double z_lo = 0.0;
    double z_hi = 0.0;
    std::size_t resolution = 100;
};

/// Plane maps through the trap center. `provider(pos)` returns the
/// coefficients at a position (numeric, weak, or grid-interpolated).
template <typename Provider>
CrossSections teq_cross_sections(const CrossSectionSpec& spec, const ModeGeometry& geom, Provider&& provider,
    unsigned threads = 1, bool include_spontaneous = false)
{
    const std::size_t n = spec.resolution;
    const auto xs = linspace(-spec.x_half, spec.x_half, n);
    const auto ys = linspace(-spec.y_half, spec.y_half, n);
    const auto zs = linspace(spec.z_lo, spec.z_hi, n);

    auto fill = [&](TeqMap& map, auto&& to_pos) {
        map.resize();
        parallel_for(map.axis1.size(), threads, [&](std::size_t i1) {
            for (std::size_t i2 = 0; i2 < map.axis2.size(); ++i2) {
                const std::size_t k = map.index(i1, i2);
                const Vec3 pos = to_pos(map.axis1[i1], map.axis2[i2]);
                const CoefficientPoint pt = provider(pos);
                map.beta[k] = pt.beta;
                map.d_total[k] = pt.d_total();
                const Temperature t = point_temperature(pt, coupling(pos, geom).grad, include_spontaneous);
                map.kelvin[k] = t.kelvin;
                map.flags[k] = t.singular ? 1 : 0;
            }
        });
    };
    auto named = [](const char* a1, const char* a2, const std::vector<double>& v1, const std::vector<double>& v2) {
        TeqMap m;
        m.axis1_name = a1;
        m.axis2_name = a2;
        m.axis1_scale = m.axis2_scale = 1e9;
        m.axis1 = v1;
        m.axis2 = v2;
        return m;
    };

    CrossSections out;
    out.yz = named("y_nm", "z_nm", ys, zs);
    fill(out.yz, [](double y, double z) { return Vec3(0.0, y, z); });
    out.xy = named("x_nm", "y_nm", xs, ys);
    fill(out.xy, [&](double x, double y) { return Vec3(x, y, spec.z_trap); });
    out.xz = named("x_nm", "z_nm", xs, zs);
    fill(out.xz, [](double x, double z) { return Vec3(x, 0.0, z); });
    out.z_cut = named("x_nm", "z_nm", std::vector<double>{0.0}, zs);
    fill(out.z_cut, [](double x, double z) { return Vec3(x, 0.0, z); });
    return out;
}

} // namespace cavitycool
