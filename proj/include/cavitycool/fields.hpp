#pragma once

// Parametric cavity coupling g(x) and the two-color evanescent trap with the
// Casimir-Polder term. Coordinates: x along the waveguide axis, y across its
// width, z the height above the top surface.

#include "cavitycool/errors.hpp"
#include "cavitycool/units.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>

namespace cavitycool {

using Vec3 = Eigen::Vector3d;

struct ModeGeometry {
    double g0 = 0.0;    // coupling at (0,0,0), rad/s
    double k_ax = 0.0;  // axial standing-wave wavenumber, rad/m
    double q_len = 0.0; // transverse cosine scale, m
    double d_len = 0.0; // evanescent decay length, m

    void validate() const
    {
        require(g0 > 0.0, "g0 must be > 0");
        require(k_ax > 0.0, "k_ax must be > 0");
        require(q_len > 0.0, "q_len must be > 0");
        require(d_len > 0.0, "d_len must be > 0");
    }
};

struct Coupling {
    double g;
    Vec3 grad;
};

/// g(x) = g0 cos(k_ax x) cos(y/q) exp(-z/d) with its analytic gradient.
inline Coupling coupling(const Vec3& pos, const ModeGeometry& geom)
{
    const double cx = std::cos(geom.k_ax * pos.x());
    const double sx = std::sin(geom.k_ax * pos.x());
    const double cy = std::cos(pos.y() / geom.q_len);
    const double sy = std::sin(pos.y() / geom.q_len);
    const double ez = std::exp(-pos.z() / geom.d_len);
    const double g = geom.g0 * cx * cy * ez;
    Coupling out;
    out.g = g;
    out.grad = Vec3(-geom.g0 * geom.k_ax * sx * cy * ez, -geom.g0 * cx * sy * ez / geom.q_len, -g / geom.d_len);
    return out;
}

struct TrapParams {
    double u_blue = 0.0;  // J, repulsive amplitude at the surface
    double u_red = 0.0;   // J, attractive amplitude (negative)
    double d_blue = 0.0;  // field decay length of the blue light, m
    double d_red = 0.0;   // field decay length of the red light, m
    double k_red = 0.0;   // red standing-wave wavenumber, rad/m
    double q_blue = 0.0;  // m
    double q_red = 0.0;   // m
    double c4 = 0.0;      // Casimir-Polder C4, J m^4
    double lambda_tilde = 0.0; // m

    /// Structural checks only; amplitudes may still be zero before calibration.
    void validate_shape() const
    {
        require(d_blue > 0.0 && d_red > 0.0, "trap decay lengths must be > 0");
        require(d_blue < d_red, "blue decay length must be shorter than red");
        require(k_red > 0.0, "k_red must be > 0");
        require(q_blue > 0.0 && q_red > 0.0, "trap transverse scales must be > 0");
        require(c4 > 0.0, "c4 must be > 0");
        require(lambda_tilde >= 0.0, "lambda_tilde must be >= 0");
    }

    void validate() const
    {
        validate_shape();
        require(u_blue > 0.0, "u_blue must be > 0");
        require(u_red < 0.0, "u_red must be < 0");
    }

    /// Axial lattice period of the red standing wave.
    double site_period() const { return std::numbers::pi / k_red; }
};

struct Potential {
    double value; // J
    Vec3 grad;    // J/m
};

inline Potential trap_potential(const Vec3& pos, const TrapParams& t)
{
    const double z = pos.z();
    if (!(z > 0.0)) {
        std::ostringstream msg;
        msg << "trap_potential: z must be > 0, got " << z;
        throw ContractViolation(msg.str());
    }
    const double cyb = std::cos(pos.y() / t.q_blue);
    const double cyr = std::cos(pos.y() / t.q_red);
    const double cxr = std::cos(t.k_red * pos.x());
    const double eb = std::exp(-2.0 * z / t.d_blue);
    const double er = std::exp(-2.0 * z / t.d_red);

    const double blue = t.u_blue * cyb * cyb * eb;
    const double red = t.u_red * cxr * cxr * cyr * cyr * er;
    const double zl = z + t.lambda_tilde;
    const double denom = z * z * z * zl;
    const double cp = -t.c4 / denom;

    Potential out;
    out.value = blue + red + cp;
    out.grad.x() = -t.u_red * t.k_red * std::sin(2.0 * t.k_red * pos.x()) * cyr * cyr * er;
    out.grad.y() = -t.u_blue * std::sin(2.0 * pos.y() / t.q_blue) / t.q_blue * eb
        - t.u_red * cxr * cxr * std::sin(2.0 * pos.y() / t.q_red) / t.q_red * er;
    out.grad.z() = -2.0 / t.d_blue * blue - 2.0 / t.d_red * red
        + t.c4 * (3.0 * z * z * zl + z * z * z) / (denom * denom);
    return out;
}

inline Vec3 total_conservative_force(const Vec3& pos, const TrapParams& t) { return -trap_potential(pos, t).grad; }

} // namespace cavitycool
