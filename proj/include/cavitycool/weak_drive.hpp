#pragma once

// Closed-form weak-driving quantities on the {|1,g>, |0,e>, |0,g>} subspace,
// plus an independent quantum-regression route to the dipole diffusion.

#include "cavitycool/errors.hpp"
#include "cavitycool/quantum_core.hpp"
#include "cavitycool/units.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>

namespace cavitycool {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct WeakDriveContext {
    cd q;        // Gamma kappa + g^2 - Da Dc - i (Dc Gamma + Da kappa)
    double chi;  // normalizes the trace of rho0 to one
    double g;
    Vec3 grad_g;

    double q_abs2() const { return std::norm(q); }
};

inline WeakDriveContext make_weak_context(const SystemParams& p, double g, const Vec3& grad_g)
{
    WeakDriveContext ctx;
    ctx.g = g;
    ctx.grad_g = grad_g;
    ctx.q = cd(p.Gamma * p.kappa + g * g - p.delta_a * p.delta_c, -(p.delta_c * p.Gamma + p.delta_a * p.kappa));
    const double eps2 = p.epsilon * p.epsilon;
    ctx.chi = std::norm(ctx.q) - (p.Gamma * p.Gamma + p.delta_a * p.delta_a + g * g) * eps2;
    return ctx;
}

/// Leading-order steady state, rows/cols ordered |1,g>, |0,e>, |0,g>.
inline Eigen::Matrix3cd rho0_weak(const WeakDriveContext& ctx, const SystemParams& p)
{
    const cd i(0, 1);
    const double e = p.epsilon, e2 = e * e, g = ctx.g;
    const double G = p.Gamma, Da = p.delta_a;
    const cd Q = ctx.q, Qc = std::conj(ctx.q);
    Eigen::Matrix3cd m;
    m << (G * G + Da * Da) * e2, g * (Da + i * G) * e2, Qc * (G - i * Da) * e,
        g * (Da - i * G) * e2, g * g * e2, -i * Qc * g * e,
        Q * (G + i * Da) * e, i * Q * g * e, ctx.chi;
    return m / ctx.q_abs2();
}

/// Weak-drive steady-state scalars that do not involve position derivatives.
struct WeakScalars {
    double n_bar;         // <a^dag a>
    double p_e;           // <sigma_+ sigma_->
    double coupling_corr; // <a^dag sigma_- + a sigma_+>
};

inline WeakScalars weak_scalars(const WeakDriveContext& ctx, const SystemParams& p)
{
    const double s = p.epsilon * p.epsilon / ctx.q_abs2();
    return {s * (p.delta_a * p.delta_a + p.Gamma * p.Gamma), s * ctx.g * ctx.g, 2.0 * s * ctx.g * p.delta_a};
}

/// <F> = -(eps^2/|Q|^2) hbar grad(g^2) Delta_a.
inline Vec3 force_weak(const WeakDriveContext& ctx, const SystemParams& p)
{
    const double s = p.epsilon * p.epsilon / ctx.q_abs2();
    return -s * constants::hbar * 2.0 * ctx.g * p.delta_a * ctx.grad_g;
}

/// beta^{ij} / (d_i g d_j g), the weak-drive friction prefactor in kg s^-1 per (rad/s/m)^2.
inline double friction_weak_prefactor(const WeakDriveContext& ctx, const SystemParams& p)
{
    const double Da = p.delta_a, Dc = p.delta_c, G = p.Gamma, k = p.kappa, g = ctx.g;
    const double Da2 = Da * Da, Da3 = Da2 * Da, Dc2 = Dc * Dc, Dc3 = Dc2 * Dc, Dc4 = Dc2 * Dc2;
    const double G2 = G * G, G3 = G2 * G, k2 = k * k, k3 = k2 * k, k4 = k2 * k2;
    const double g2 = g * g, g4 = g2 * g2, g6 = g4 * g2;
    const double q6 = std::pow(ctx.q_abs2(), 3);

    const double first = -Da3 * Dc4 * G - Da2 * Dc3 * g2 * G + Da * Dc2 * g4 * G + Dc * g6 * G - Da * Dc4 * G3
        + Dc3 * g2 * G3 - 2 * Da3 * Dc2 * g2 * k + 2 * Da * g6 * k + 2 * Dc * g4 * G2 * k - 2 * Da3 * Dc2 * G * k2
        - Da2 * Dc * g2 * G * k2 + 3 * Da * g4 * G * k2 - 2 * Da * Dc2 * G3 * k2 + Dc * g2 * G3 * k2
        - 2 * Da3 * g2 * k3 - Da3 * G * k4 - Da * G3 * k4;
    const double second = -2 * Da2 * Dc2 * G + 2 * g4 * G - 2 * Dc2 * G3 - 4 * Da3 * Dc * k + 4 * Da2 * g2 * k
        - 4 * Da * Dc * G2 * k + 4 * g2 * G2 * k + 2 * Da2 * G * k2 + 2 * G3 * k2;

    const double eps2 = p.epsilon * p.epsilon;
    return -constants::hbar * eps2 * 4.0 * (first + second * Da * g2) / q6;
}

inline Mat3 friction_weak(const WeakDriveContext& ctx, const SystemParams& p)
{
    return friction_weak_prefactor(ctx, p) * (ctx.grad_g * ctx.grad_g.transpose());
}

struct DiffusionTensors {
    Mat3 d_dp = Mat3::Zero(); // dipole-force fluctuations
    double d_se = 0.0;        // spontaneous emission, isotropic

    Mat3 total() const { return d_dp + d_se * Mat3::Identity(); }
};

/// D_dp^{ij} / (hbar^2 d_i g d_j g).
inline double diffusion_weak_prefactor(const WeakDriveContext& ctx, const SystemParams& p)
{
    const double q2 = ctx.q_abs2();
    const double bracket = 1.0
        + 4.0 * p.delta_a * ctx.g * ctx.g / p.Gamma * (p.delta_c * p.Gamma + p.delta_a * p.kappa) / q2;
    return p.epsilon * p.epsilon * p.Gamma / q2 * bracket;
}

inline DiffusionTensors diffusion_weak(const WeakDriveContext& ctx, const SystemParams& p)
{
    constexpr double hbar2 = constants::hbar * constants::hbar;
    DiffusionTensors out;
    out.d_dp = hbar2 * diffusion_weak_prefactor(ctx, p) * (ctx.grad_g * ctx.grad_g.transpose());
    out.d_se = hbar2 * p.k_photon * p.k_photon * ctx.g * ctx.g * p.epsilon * p.epsilon * p.Gamma / ctx.q_abs2();
    return out;
}

/// Linear drift of first moments Y = (a, sigma_-) and quadratic moments
/// X = (X1, X2, a^dag a, sigma_+ sigma_-), with the weak-drive covariances
/// <X1(0), .> that seed the regression.
struct RegressionSystem {
    Eigen::Matrix2cd a_matrix;
    Eigen::Matrix4d c_matrix;
    // I = i_from_y * L_Y + i_from_ydag * L_{Y^dag} (rows: sigma_- + sigma_+, -i(sigma_- - sigma_+), a + a^dag, 0)
    Eigen::Matrix<cd, 4, 2> i_from_y;
    Eigen::Matrix<cd, 4, 2> i_from_ydag;
    Eigen::Vector2cd init_y;
    Eigen::Vector2cd init_ydag;
    Eigen::Vector4cd init_x;
    double epsilon = 0.0;
};

inline RegressionSystem make_regression_system(const WeakDriveContext& ctx, const SystemParams& p)
{
    const cd i(0, 1);
    const double g = ctx.g, Da = p.delta_a, Dc = p.delta_c, G = p.Gamma, k = p.kappa, e = p.epsilon;
    RegressionSystem rs;
    rs.epsilon = e;
    rs.a_matrix << i * Dc - k, -i * g, -i * g, i * Da - G;
    rs.c_matrix << -(G + k), -(Da - Dc), 0, 0,
        Da - Dc, -(G + k), -2 * g, 2 * g,
        0, g, -2 * k, 0,
        0, -g, 0, -2 * G;

    rs.i_from_y.setZero();
    rs.i_from_ydag.setZero();
    rs.i_from_y(0, 1) = 1.0;
    rs.i_from_ydag(0, 1) = 1.0;
    rs.i_from_y(1, 1) = -i;
    rs.i_from_ydag(1, 1) = i;
    rs.i_from_y(2, 0) = 1.0;
    rs.i_from_ydag(2, 0) = 1.0;

    // Weak-drive expectations read off the leading-order steady state.
    const Eigen::Matrix3cd rho = rho0_weak(ctx, p);
    const cd n_bar = rho(0, 0);
    const cd p_e = rho(1, 1);
    const cd sigma_plus = rho(2, 1);    // <sigma_+> = <0g|rho|0e>
    const cd a_dag = rho(2, 0);         // <a^dag>   = <0g|rho|1g>
    const cd sigma_plus_a = rho(0, 1);  // <sigma_+ a>
    const cd a_dag_sigma = rho(1, 0);   // <a^dag sigma_->

    rs.init_y.setZero();
    rs.init_ydag << sigma_plus, a_dag;
    rs.init_x << p_e + n_bar, -i * (p_e - n_bar), sigma_plus_a, a_dag_sigma;
    return rs;
}

/// Laplace transform at s = 0 of <delta X1(0) delta X1(t)>. With
/// L{d/dt xi} = -xi(0) + s L{xi}, the s = 0 equations are plain linear solves.
inline cd regression_laplace_x1x1(const RegressionSystem& rs)
{
    const auto a_eigs = rs.a_matrix.eigenvalues();
    const auto c_eigs = Eigen::EigenSolver<Eigen::Matrix4d>(rs.c_matrix, false).eigenvalues();
    for (int k = 0; k < 2; ++k)
        if (!(a_eigs(k).real() < 0.0))
            throw RegressionInstability("first-moment drift has an eigenvalue with non-negative real part");
    for (int k = 0; k < 4; ++k)
        if (!(c_eigs(k).real() < 0.0))
            throw RegressionInstability("quadratic-moment drift has an eigenvalue with non-negative real part");

    const Eigen::Vector2cd l_y = rs.a_matrix.partialPivLu().solve(-rs.init_y);
    const Eigen::Vector2cd l_ydag = Eigen::Matrix2cd(rs.a_matrix.conjugate()).partialPivLu().solve(-rs.init_ydag);
    const Eigen::Vector4cd l_i = rs.i_from_y * l_y + rs.i_from_ydag * l_ydag;
    const Eigen::Matrix4cd c = rs.c_matrix.cast<cd>();
    const Eigen::Vector4cd l_x = c.partialPivLu().solve(-rs.init_x - rs.epsilon * l_i);
    return l_x(0);
}

inline Mat3 regression_oracle_diffusion(const WeakDriveContext& ctx, const SystemParams& p)
{
    const RegressionSystem rs = make_regression_system(ctx, p);
    const double l = regression_laplace_x1x1(rs).real();
    return constants::hbar * constants::hbar * l * (ctx.grad_g * ctx.grad_g.transpose());
}

/// Weak-drive g at which |F_z| peaks when g decays exponentially in z.
inline double peak_force_coupling(double delta_p, double Gamma, double kappa)
{
    return std::pow((delta_p * delta_p + Gamma * Gamma) * (delta_p * delta_p + kappa * kappa), 0.25);
}

} // namespace cavitycool
