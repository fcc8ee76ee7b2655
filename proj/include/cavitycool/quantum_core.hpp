#pragma once

// Truncated Fock (x) two-level space: operators, the Jaynes-Cummings plus pump
// Hamiltonian, the Lindblad Liouvillian in column-stacked form, and the
// bordered linear solves used for steady states and traceless responses.

#include "cavitycool/errors.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <sstream>
#include <string>

namespace cavitycool {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

struct SystemParams {
    double kappa = 0.0;    // cavity field decay rate, rad/s
    double Gamma = 0.0;    // atomic dipole decay rate (gamma/2), rad/s
    double delta_a = 0.0;  // pump-atom detuning, rad/s
    double delta_c = 0.0;  // pump-cavity detuning, rad/s
    double epsilon = 0.0;  // pump rate, rad/s
    double k_photon = 0.0; // free-space wavenumber, rad/m
    double mass = 0.0;     // kg
    int n_max = 4;         // photon states 0..n_max

    int dim() const { return 2 * (n_max + 1); }

    void validate() const
    {
        if (n_max < 1)
            throw InvalidTruncation("n_max must be >= 1, got " + std::to_string(n_max));
        require(kappa > 0.0, "kappa must be > 0");
        require(Gamma > 0.0, "Gamma must be > 0");
        require(epsilon >= 0.0, "epsilon must be >= 0");
        require(mass > 0.0, "mass must be > 0");
        require(std::isfinite(delta_a) && std::isfinite(delta_c), "detunings must be finite");
    }
};

/// Density matrix on the |n,g>,|n,e> basis (index 2n for g, 2n+1 for e).
struct DensityMatrix {
    MatrixXcd entries;

    int dim() const { return static_cast<int>(entries.rows()); }

    static DensityMatrix from_vector(const VectorXcd& vec, int dim)
    {
        DensityMatrix rho;
        rho.entries = Eigen::Map<const MatrixXcd>(vec.data(), dim, dim);
        return rho;
    }

    VectorXcd vectorized() const { return Eigen::Map<const VectorXcd>(entries.data(), entries.size()); }

    double hermiticity_error() const
    {
        const double norm = entries.norm();
        return norm == 0.0 ? 0.0 : (entries - entries.adjoint()).norm() / norm;
    }

    cd trace() const { return entries.trace(); }

    double min_eigenvalue() const
    {
        const MatrixXcd herm = 0.5 * (entries + entries.adjoint());
        Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }
};

/// Column-stacking superoperator: vec(A X B) = (B^T kron A) vec(X).
struct Superoperator {
    MatrixXcd entries;

    int dim2() const { return static_cast<int>(entries.rows()); }
    int dim() const { return static_cast<int>(std::lround(std::sqrt(double(entries.rows())))); }

    VectorXcd apply(const VectorXcd& vec) const { return entries * vec; }
    MatrixXcd apply(const MatrixXcd& rho) const
    {
        const VectorXcd out = entries * Eigen::Map<const VectorXcd>(rho.data(), rho.size());
        return Eigen::Map<const MatrixXcd>(out.data(), rho.rows(), rho.cols());
    }
};

namespace ops {

inline MatrixXcd annihilation(int n_max)
{
    const int nf = n_max + 1;
    MatrixXcd a = MatrixXcd::Zero(nf, nf);
    for (int n = 1; n < nf; ++n)
        a(n - 1, n) = std::sqrt(double(n));
    return Eigen::kroneckerProduct(a, MatrixXcd::Identity(2, 2)).eval();
}

/// sigma_- = |g><e|.
inline MatrixXcd lowering(int n_max)
{
    MatrixXcd sm = MatrixXcd::Zero(2, 2);
    sm(0, 1) = 1.0;
    return Eigen::kroneckerProduct(MatrixXcd::Identity(n_max + 1, n_max + 1), sm).eval();
}

/// a^dag sigma_- + a sigma_+ ; the force operator is -hbar grad(g) times this.
inline MatrixXcd coupling_operator(int n_max)
{
    const MatrixXcd a = annihilation(n_max);
    const MatrixXcd sm = lowering(n_max);
    return a.adjoint() * sm + a * sm.adjoint();
}

inline MatrixXcd spre(const MatrixXcd& op)
{
    return Eigen::kroneckerProduct(MatrixXcd::Identity(op.rows(), op.cols()), op).eval();
}

inline MatrixXcd spost(const MatrixXcd& op)
{
    return Eigen::kroneckerProduct(op.transpose(), MatrixXcd::Identity(op.rows(), op.cols())).eval();
}

/// D[c] rho = 2 c rho c^dag - c^dag c rho - rho c^dag c.
inline MatrixXcd dissipator(const MatrixXcd& c)
{
    const MatrixXcd cdc = c.adjoint() * c;
    return (2.0 * Eigen::kroneckerProduct(c.conjugate(), c).eval() - spre(cdc) - spost(cdc)).eval();
}

inline MatrixXcd commutator_super(const MatrixXcd& h) { return (-cd(0, 1) * (spre(h) - spost(h))).eval(); }

} // namespace ops

/// H_JC + H_pump in units of hbar (rad/s).
inline MatrixXcd build_hamiltonian(const SystemParams& params, double g)
{
    if (params.n_max < 1)
        throw InvalidTruncation("n_max must be >= 1, got " + std::to_string(params.n_max));
    const MatrixXcd a = ops::annihilation(params.n_max);
    const MatrixXcd sm = ops::lowering(params.n_max);
    const MatrixXcd ad = a.adjoint();
    MatrixXcd h = -params.delta_c * (ad * a) - params.delta_a * (sm.adjoint() * sm);
    h += g * ops::coupling_operator(params.n_max);
    h += -cd(0, 1) * params.epsilon * (ad - a);
    return h;
}

/// The Liouvillian is affine in g: L(g) = base + g * slope. Building the two
/// pieces once lets position sweeps skip the Kronecker products.
struct LiouvillianParts {
    MatrixXcd base;
    MatrixXcd slope; // dL/dg

    Superoperator at(double g) const { return Superoperator{base + g * slope}; }
};

inline LiouvillianParts liouvillian_parts(const SystemParams& params)
{
    params.validate();
    const MatrixXcd a = ops::annihilation(params.n_max);
    const MatrixXcd sm = ops::lowering(params.n_max);
    LiouvillianParts parts;
    parts.base = ops::commutator_super(build_hamiltonian(params, 0.0));
    parts.base += params.kappa * ops::dissipator(a) + params.Gamma * ops::dissipator(sm);
    parts.slope = ops::commutator_super(ops::coupling_operator(params.n_max));
    return parts;
}

inline Superoperator build_liouvillian(const SystemParams& params, double g) { return liouvillian_parts(params).at(g); }

/// LU factorization of L with the (0,0) population row replaced by the trace
/// functional. That row of L is minus the sum of the other population rows,
/// so dropping it loses nothing for traceless right-hand sides. One
/// factorization serves the steady state and every constrained solve.
class BorderedSolver {
public:
    explicit BorderedSolver(const Superoperator& L) : liouvillian_(L.entries), dim_(L.dim())
    {
        const auto n2 = liouvillian_.rows();
        if (n2 != static_cast<Eigen::Index>(dim_) * dim_)
            throw ContractViolation("superoperator is not square in a square dimension");
        l_norm_ = liouvillian_.norm();
        row_scale_ = liouvillian_.cwiseAbs().maxCoeff();
        if (row_scale_ == 0.0)
            row_scale_ = 1.0;
        MatrixXcd bordered = liouvillian_;
        bordered.row(0).setZero();
        for (int m = 0; m < dim_; ++m)
            bordered(0, m + m * dim_) = row_scale_;
        lu_.compute(bordered);
        rcond_ = lu_.rcond();
        if (!(rcond_ > 1e-14)) {
            std::ostringstream msg;
            msg << "bordered Liouvillian is singular (rcond=" << rcond_ << "); steady state is not unique";
            throw NonUniqueSteadyState(msg.str());
        }
    }

    double rcond() const { return rcond_; }
    int dim() const { return dim_; }
    const MatrixXcd& liouvillian() const { return liouvillian_; }

    VectorXcd steady_state_vector() const
    {
        VectorXcd rhs = VectorXcd::Zero(liouvillian_.rows());
        rhs(0) = row_scale_;
        VectorXcd rho = lu_.solve(rhs);
        // Enforce exact Hermiticity; the solve is exact up to rounding.
        MatrixXcd m = Eigen::Map<MatrixXcd>(rho.data(), dim_, dim_);
        m = 0.5 * (m + m.adjoint()).eval();
        m /= m.trace();
        rho = Eigen::Map<VectorXcd>(m.data(), m.size());
        const double residual = (liouvillian_ * rho).norm();
        if (!(residual <= 1e-10 * l_norm_)) {
            std::ostringstream msg;
            msg << "steady-state residual " << residual << " exceeds tolerance (rcond=" << rcond_ << ")";
            throw NonUniqueSteadyState(msg.str());
        }
        return rho;
    }

    /// Unique traceless x with L x = rhs.
    VectorXcd solve_traceless(const VectorXcd& rhs) const
    {
        cd tr = 0.0;
        for (int m = 0; m < dim_; ++m)
            tr += rhs(m + m * dim_);
        const double rhs_norm = rhs.norm();
        if (std::abs(tr) > 1e-10 * std::max(rhs_norm, 1e-300) && std::abs(tr) > 1e-300) {
            std::ostringstream msg;
            msg << "constrained_solve: right-hand side is not traceless (|Tr|=" << std::abs(tr)
                << ", norm=" << rhs_norm << ")";
            throw ContractViolation(msg.str());
        }
        VectorXcd b = rhs;
        b(0) = 0.0;
        VectorXcd x = lu_.solve(b);
        const double residual = (liouvillian_ * x - rhs).norm();
        if (!(residual <= 1e-9 * (l_norm_ * x.norm() + rhs_norm))) {
            std::ostringstream msg;
            msg << "constrained_solve residual " << residual << " too large (rcond=" << rcond_ << ")";
            throw NumericalError(msg.str());
        }
        return x;
    }

private:
    MatrixXcd liouvillian_;
    int dim_;
    double l_norm_ = 0.0;
    double row_scale_ = 1.0;
    double rcond_ = 0.0;
    Eigen::PartialPivLU<MatrixXcd> lu_;
};

inline DensityMatrix steady_state(const Superoperator& L)
{
    BorderedSolver solver(L);
    return DensityMatrix::from_vector(solver.steady_state_vector(), L.dim());
}

inline VectorXcd constrained_solve(const Superoperator& L, const VectorXcd& rhs)
{
    return BorderedSolver(L).solve_traceless(rhs);
}

struct Observables {
    double n_bar = 0.0;         // <a^dag a>
    double p_e = 0.0;           // <sigma_+ sigma_->
    double coupling_corr = 0.0; // <a^dag sigma_- + a sigma_+>
};

inline Observables observables(const DensityMatrix& rho)
{
    const int dim = rho.dim();
    const int n_max = dim / 2 - 1;
    const MatrixXcd a = ops::annihilation(n_max);
    const MatrixXcd sm = ops::lowering(n_max);
    Observables out;
    out.n_bar = (a.adjoint() * a * rho.entries).trace().real();
    out.p_e = (sm.adjoint() * sm * rho.entries).trace().real();
    out.coupling_corr = (ops::coupling_operator(n_max) * rho.entries).trace().real();
    return out;
}

} // namespace cavitycool
