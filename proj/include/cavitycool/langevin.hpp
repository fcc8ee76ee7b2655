#pragma once

// Semiclassical 3D Langevin integration: RK4 on the deterministic drift with
// coefficients interpolated at every stage, one Euler-Maruyama velocity kick
// per step, ensembles with independent seeded streams, and the cooling and
// loading analyses built on them.

#include "cavitycool/coefficients.hpp"
#include "cavitycool/csv.hpp"
#include "cavitycool/errors.hpp"
#include "cavitycool/fields.hpp"
#include "cavitycool/fitting.hpp"
#include "cavitycool/parallel.hpp"
#include "cavitycool/units.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace cavitycool {

struct AtomState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double time = 0.0;

    bool finite() const { return position.allFinite() && velocity.allFinite() && std::isfinite(time); }
};

// ---------------------------------------------------------------- fields

/// Potential provider for free flight.
struct FreeSpace {
    Potential operator()(const Vec3&) const { return Potential{0.0, Vec3::Zero()}; }
};

struct TrapField {
    TrapParams trap;
    Potential operator()(const Vec3& pos) const { return trap_potential(pos, trap); }
};

/// Coefficient provider with the same value everywhere (tests, OU checks).
struct UniformCoefficients {
    CoefficientPoint point;
    bool contains(const Vec3&) const { return true; }
    CoefficientPoint interpolate(const Vec3& pos) const
    {
        CoefficientPoint p = point;
        p.position = pos;
        return p;
    }
};

// ---------------------------------------------------------------- noise

struct NoiseAmplitude {
    Mat3 b = Mat3::Zero();
    bool clamped = false; // a negative eigenvalue beyond round-off was set to zero
};

/// Symmetric square root with D = B B^T / 2 after clamping negative eigenvalues.
inline NoiseAmplitude noise_amplitude(const Mat3& d)
{
    const double scale = d.cwiseAbs().maxCoeff();
    const double asym = (d - d.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale) {
        std::ostringstream msg;
        msg << "noise_amplitude: diffusion tensor is not symmetric (max |D - D^T| = " << asym << ", max |D| = " << scale << ")";
        throw ContractViolation(msg.str());
    }
    NoiseAmplitude out;
    if (scale == 0.0)
        return out;
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (d + d.transpose()));
    Vec3 lambda = eig.eigenvalues();
    const double top = lambda.cwiseAbs().maxCoeff();
    // Round-off eigenvalues are dropped too: their square roots would leak
    // noise across a rank-1 tensor at the 1e-8 level.
    for (int i = 0; i < 3; ++i) {
        if (lambda(i) < -1e-12 * top)
            out.clamped = true;
        if (lambda(i) <= 1e-12 * top)
            lambda(i) = 0.0;
    }
    const Vec3 root = (2.0 * lambda).cwiseSqrt();
    out.b = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
    return out;
}

// ---------------------------------------------------------------- stepping

namespace detail {
template <typename Field, typename Pot>
Vec3 drift_acceleration(const Field& field, const Pot& potential, double mass, const Vec3& x, const Vec3& v, bool pump)
{
    Vec3 f = -potential(x).grad;
    if (pump) {
        const CoefficientPoint c = field.interpolate(x);
        f += c.force + c.beta * v;
    }
    return f / mass;
}
} // namespace detail

struct StepOptions {
    double mass = constants::cesium_mass;
    double dt = 8e-9;
    bool pump = true;  // light force, friction and diffusion from the coefficient field
    bool noise = true; // stochastic kick (needs pump)
};

/// One step. `xi` is a standard-normal 3-vector; it is ignored without noise.
/// The friction force enters as +beta v (beta < 0 damps). The kick uses the
/// diffusion tensor at the start of the step.
template <typename Field, typename Pot>
AtomState step(const AtomState& s, const Field& field, const Pot& potential, const StepOptions& opt, const Vec3& xi,
    bool* clamped = nullptr)
{
    require(opt.dt > 0.0, "step: dt must be > 0");
    const double h = opt.dt;
    const Vec3& x = s.position;
    const Vec3& v = s.velocity;
    auto acc = [&](const Vec3& px, const Vec3& pv) {
        return detail::drift_acceleration(field, potential, opt.mass, px, pv, opt.pump);
    };

    const Vec3 k1x = v;
    const Vec3 k1v = acc(x, v);
    const Vec3 k2x = v + 0.5 * h * k1v;
    const Vec3 k2v = acc(x + 0.5 * h * k1x, k2x);
    const Vec3 k3x = v + 0.5 * h * k2v;
    const Vec3 k3v = acc(x + 0.5 * h * k2x, k3x);
    const Vec3 k4x = v + h * k3v;
    const Vec3 k4v = acc(x + h * k3x, k4x);

    AtomState out;
    out.position = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    out.velocity = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    out.time = s.time + h;

    if (opt.pump && opt.noise) {
        const NoiseAmplitude b = noise_amplitude(field.interpolate(x).d_total());
        if (clamped)
            *clamped = b.clamped;
        out.velocity += (b.b * xi) * (std::sqrt(h) / opt.mass);
    }
    return out;
}

// ---------------------------------------------------------------- regions

/// Box outside which the atom counts as lost.
struct EscapeRegion {
    double x_half = 0.0;
    double y_half = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;

    bool inside(const Vec3& p) const
    {
        return std::abs(p.x()) <= x_half && std::abs(p.y()) <= y_half && p.z() >= z_min && p.z() <= z_max;
    }

    /// Which face was crossed: "surface", "top", "x-", "x+", "y-", "y+"; empty when inside.
    std::string exit_direction(const Vec3& p) const
    {
        if (p.z() < z_min)
            return "surface";
        if (p.z() > z_max)
            return "top";
        if (p.x() < -x_half)
            return "x-";
        if (p.x() > x_half)
            return "x+";
        if (p.y() < -y_half)
            return "y-";
        if (p.y() > y_half)
            return "y+";
        return {};
    }

    void validate() const
    {
        require(x_half > 0.0 && y_half > 0.0, "escape region half widths must be > 0");
        require(z_min > 0.0 && z_max > z_min, "escape region needs 0 < z_min < z_max");
    }
};

/// Lowest potential on the region boundary above height z_floor, i.e. the
/// energy an atom needs to leave the well sideways or upward. Faces below
/// z_floor are excluded: there the blue wall and the surface close the well.
template <typename Pot>
double escape_energy(const Pot& potential, const EscapeRegion& region, double z_floor, std::size_t resolution = 121)
{
    const double z_lo = std::max(z_floor, region.z_min);
    const auto xs = linspace(-region.x_half, region.x_half, resolution);
    const auto ys = linspace(-region.y_half, region.y_half, resolution);
    const auto zs = linspace(z_lo, region.z_max, resolution);
    double best = std::numeric_limits<double>::infinity();
    for (double a : xs)
        for (double b : ys)
            best = std::min(best, potential(Vec3(a, b, region.z_max)).value);
    for (double c : zs) {
        for (double a : xs)
            for (double sgn : {-1.0, 1.0})
                best = std::min(best, potential(Vec3(a, sgn * region.y_half, c)).value);
        for (double b : ys)
            for (double sgn : {-1.0, 1.0})
                best = std::min(best, potential(Vec3(sgn * region.x_half, b, c)).value);
    }
    return best;
}

// ---------------------------------------------------------------- trajectories

enum class Outcome { running, trapped, lost };

inline const char* to_string(Outcome o)
{
    switch (o) {
    case Outcome::trapped:
        return "trapped";
    case Outcome::lost:
        return "lost";
    default:
        return "running";
    }
}

struct Trajectory {
    std::vector<AtomState> samples;
    Outcome outcome = Outcome::running;
    std::string lost_direction;
    double lost_time = std::numeric_limits<double>::quiet_NaN();
    AtomState final_state;
    std::uint64_t seed = 0;   // master seed
    std::uint64_t stream = 0; // per-trajectory stream index
    std::size_t clamp_events = 0;

    CsvTable to_csv() const
    {
        CsvTable t;
        t.comments = {std::string("outcome = ") + to_string(outcome), "seed = " + std::to_string(seed),
            "stream = " + std::to_string(stream)};
        if (outcome == Outcome::lost)
            t.comments.push_back("lost_direction = " + lost_direction + ", lost_time_s = " + format_double(lost_time));
        t.header = {"t_s", "x_m", "y_m", "z_m", "vx", "vy", "vz"};
        for (const auto& s : samples)
            t.rows.push_back({s.time, s.position.x(), s.position.y(), s.position.z(), s.velocity.x(), s.velocity.y(),
                s.velocity.z()});
        return t;
    }
};

struct TrajectoryConfig {
    StepOptions step;
    double t_max = 1e-3;
    std::size_t sample_stride = 10; // steps between stored samples
    EscapeRegion region;
    double escape_energy = 0.0; // J; bound at t_max requires E_total below this
};

/// Independent stream per (master seed, stream index).
inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream)
{
    std::seed_seq seq{std::uint32_t(master), std::uint32_t(master >> 32), std::uint32_t(stream), std::uint32_t(stream >> 32)};
    return std::mt19937_64(seq);
}

template <typename Field, typename Pot>
Trajectory run_trajectory(const AtomState& initial, const TrajectoryConfig& cfg, const Field& field, const Pot& potential,
    std::mt19937_64& rng)
{
    require(cfg.sample_stride >= 1, "sample_stride must be >= 1");
    require(cfg.t_max > 0.0, "t_max must be > 0");
    if (!initial.finite())
        throw ContractViolation("run_trajectory: initial state is not finite");

    Trajectory traj;
    traj.samples.push_back(initial);
    const auto steps = static_cast<std::uint64_t>(std::llround(cfg.t_max / cfg.step.dt));
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool stochastic = cfg.step.pump && cfg.step.noise;
    const double t0 = initial.time;

    AtomState s = initial;
    for (std::uint64_t n = 1; n <= steps; ++n) {
        Vec3 xi = Vec3::Zero();
        if (stochastic)
            xi = Vec3(normal(rng), normal(rng), normal(rng));
        bool clamped = false;
        AtomState next = step(s, field, potential, cfg.step, xi, &clamped);
        next.time = t0 + double(n) * cfg.step.dt;
        if (!next.finite()) {
            std::ostringstream msg;
            msg << "integrator diverged at t = " << next.time << " s; last valid state x = (" << s.position.transpose()
                << ") m, v = (" << s.velocity.transpose() << ") m/s";
            throw IntegratorDivergence(msg.str());
        }
        traj.clamp_events += clamped ? 1 : 0;
        s = next;
        if (!cfg.region.inside(s.position)) {
            traj.outcome = Outcome::lost;
            traj.lost_direction = cfg.region.exit_direction(s.position);
            traj.lost_time = s.time;
            traj.samples.push_back(s);
            break;
        }
        if (n % cfg.sample_stride == 0)
            traj.samples.push_back(s);
    }
    if (traj.samples.back().time != s.time)
        traj.samples.push_back(s);
    traj.final_state = s;
    if (traj.outcome != Outcome::lost) {
        const double e = 0.5 * cfg.step.mass * s.velocity.squaredNorm() + potential(s.position).value;
        traj.outcome = e < cfg.escape_energy ? Outcome::trapped : Outcome::running;
    }
    return traj;
}

// ---------------------------------------------------------------- ensembles

struct EnsembleStats {
    std::vector<double> times;               // s
    std::array<std::vector<double>, 3> kinetic; // mean M v_i^2 / 2 over surviving trajectories, J
    std::vector<double> potential;           // mean U - u_reference, J
    std::vector<double> total;               // sum of the above, J
    std::array<std::vector<double>, 3> kinetic_smoothed;
    std::vector<double> total_smoothed;
    std::vector<std::size_t> alive;
    double smoothing_window = 0.8e-6; // s
    double u_reference = 0.0;         // J

    std::size_t n = 0;
    std::size_t trapped = 0;
    std::size_t lost = 0;
    std::size_t running = 0;
    std::size_t failures = 0;
    std::size_t clamp_events = 0;
    double trapped_fraction = 0.0;
    BinomialInterval trapped_ci;
    std::string ci_method = "Clopper-Pearson exact, 95%";
    std::vector<std::string> failure_messages;

    CsvTable to_csv() const
    {
        CsvTable t;
        t.comments = {"n = " + std::to_string(n), "trapped = " + std::to_string(trapped),
            "trapped_fraction = " + format_double(trapped_fraction),
            "trapped_ci95 = [" + format_double(trapped_ci.lower) + ", " + format_double(trapped_ci.upper) + "]",
            "ci_method = " + ci_method, "lost = " + std::to_string(lost), "running = " + std::to_string(running),
            "failures = " + std::to_string(failures), "clamp_events = " + std::to_string(clamp_events),
            "u_reference_J = " + format_double(u_reference), "smoothing_window_s = " + format_double(smoothing_window)};
        t.header = {"t_s", "Ek_x_J", "Ek_y_J", "Ek_z_J", "U_J", "E_total_J", "Ek_x_smooth_J", "Ek_y_smooth_J",
            "Ek_z_smooth_J", "E_total_smooth_J", "alive"};
        for (std::size_t i = 0; i < times.size(); ++i)
            t.rows.push_back({times[i], kinetic[0][i], kinetic[1][i], kinetic[2][i], potential[i], total[i],
                kinetic_smoothed[0][i], kinetic_smoothed[1][i], kinetic_smoothed[2][i], total_smoothed[i],
                double(alive[i])});
        return t;
    }
};

struct EnsembleConfig {
    TrajectoryConfig trajectory;
    std::size_t count = 50;
    std::uint64_t master_seed = 1;
    std::uint64_t stream_offset = 0;
    unsigned threads = 1;
    double u_reference = 0.0;
    double smoothing_window = 0.8e-6;
    bool keep_trajectories = false;
};

struct EnsembleResult {
    EnsembleStats stats;
    std::vector<Trajectory> trajectories; // empty unless kept
};

/// Sampler signature: AtomState sampler(std::size_t index, std::mt19937_64& rng).
/// Each trajectory draws its initial state and then its noise from its own stream.
template <typename Field, typename Pot, typename Sampler>
EnsembleResult run_ensemble(const EnsembleConfig& cfg, const Field& field, const Pot& potential, Sampler&& sampler)
{
    require(cfg.count >= 1, "run_ensemble: need at least one trajectory");
    const auto& tc = cfg.trajectory;
    const auto steps = static_cast<std::size_t>(std::llround(tc.t_max / tc.step.dt));
    const std::size_t n_samples = steps / tc.sample_stride + 1;

    EnsembleResult result;
    EnsembleStats& st = result.stats;
    st.n = cfg.count;
    st.u_reference = cfg.u_reference;
    st.smoothing_window = cfg.smoothing_window;
    st.times.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        st.times[i] = double(i * tc.sample_stride) * tc.step.dt;
    for (auto& k : st.kinetic)
        k.assign(n_samples, 0.0);
    st.potential.assign(n_samples, 0.0);
    st.alive.assign(n_samples, 0);

    const double mass = tc.step.mass;
    auto accumulate = [&](const Trajectory& tr) {
        // Samples on the regular grid only; a trailing loss sample is off-grid.
        for (const auto& s : tr.samples) {
            const double idx = s.time / (double(tc.sample_stride) * tc.step.dt);
            const auto i = static_cast<std::size_t>(std::llround(idx));
            if (i >= n_samples || std::abs(idx - double(i)) > 1e-6)
                continue;
            if (tr.outcome == Outcome::lost && s.time >= tr.lost_time)
                continue;
            for (int a = 0; a < 3; ++a)
                st.kinetic[a][i] += 0.5 * mass * s.velocity[a] * s.velocity[a];
            st.potential[i] += potential(s.position).value - cfg.u_reference;
            st.alive[i] += 1;
        }
        st.clamp_events += tr.clamp_events;
        switch (tr.outcome) {
        case Outcome::trapped:
            ++st.trapped;
            break;
        case Outcome::lost:
            ++st.lost;
            break;
        default:
            ++st.running;
        }
    };

    // Batches keep memory bounded; aggregation is in index order, so the
    // statistics do not depend on the thread count.
    const std::size_t batch = std::max<std::size_t>(1, 4 * std::size_t(resolve_threads(cfg.threads)));
    for (std::size_t begin = 0; begin < cfg.count; begin += batch) {
        const std::size_t len = std::min(batch, cfg.count - begin);
        std::vector<Trajectory> chunk(len);
        std::vector<std::string> errors(len);
        parallel_for(len, cfg.threads, [&](std::size_t j) {
            const std::uint64_t stream = cfg.stream_offset + begin + j;
            std::mt19937_64 rng = make_stream(cfg.master_seed, stream);
            try {
                const AtomState init = sampler(begin + j, rng);
                chunk[j] = run_trajectory(init, tc, field, potential, rng);
            } catch (const NumericalError& e) {
                errors[j] = e.what();
            }
            chunk[j].seed = cfg.master_seed;
            chunk[j].stream = stream;
        });
        for (std::size_t j = 0; j < len; ++j) {
            if (!errors[j].empty()) {
                ++st.failures;
                st.failure_messages.push_back("stream " + std::to_string(chunk[j].stream) + ": " + errors[j]);
                continue;
            }
            accumulate(chunk[j]);
            if (cfg.keep_trajectories)
                result.trajectories.push_back(std::move(chunk[j]));
        }
    }
    if (st.failures * 100 > cfg.count) {
        std::ostringstream msg;
        msg << st.failures << " of " << cfg.count << " trajectories failed (limit 1%); first: " << st.failure_messages.front();
        throw NumericalError(msg.str());
    }

    for (std::size_t i = 0; i < n_samples; ++i) {
        const double w = st.alive[i] > 0 ? 1.0 / double(st.alive[i]) : std::numeric_limits<double>::quiet_NaN();
        for (auto& k : st.kinetic)
            k[i] *= w;
        st.potential[i] *= w;
    }
    st.total.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        st.total[i] = st.kinetic[0][i] + st.kinetic[1][i] + st.kinetic[2][i] + st.potential[i];
    const auto window = static_cast<std::size_t>(std::llround(cfg.smoothing_window / (double(tc.sample_stride) * tc.step.dt)));
    for (int a = 0; a < 3; ++a)
        st.kinetic_smoothed[a] = moving_average(st.kinetic[a], window);
    st.total_smoothed = moving_average(st.total, window);

    const std::size_t completed = cfg.count - st.failures;
    if (completed > 0) {
        st.trapped_fraction = double(st.trapped) / double(completed);
        st.trapped_ci = clopper_pearson(st.trapped, completed);
    }
    return result;
}

// ---------------------------------------------------------------- analyses

struct AxisRate {
    double rate = 0.0;  // beta_eff / M, 1/s (negative when cooling)
    double sigma = 0.0; // 1/s
    double plateau = 0.0; // J
    double relaxation_time = 0.0; // 1 / |beta_eff / M|, s
    bool ok = false;
};

/// Exponential fit of each axis' mean kinetic energy. Kinetic energy relaxes
/// at twice the velocity damping rate, so beta_eff / M = -lambda / 2.
inline std::array<AxisRate, 3> fit_effective_friction(const EnsembleStats& stats, double t_begin = 0.0,
    double t_end = std::numeric_limits<double>::infinity())
{
    std::vector<double> t;
    std::array<std::vector<double>, 3> y;
    for (std::size_t i = 0; i < stats.times.size(); ++i) {
        if (stats.times[i] < t_begin || stats.times[i] > t_end || stats.alive[i] == 0)
            continue;
        t.push_back(stats.times[i] - t_begin);
        for (int a = 0; a < 3; ++a)
            y[a].push_back(stats.kinetic[a][i]);
    }
    std::array<AxisRate, 3> out{};
    if (t.size() < 4)
        return out;
    const double span = t.back() - t.front();
    for (int a = 0; a < 3; ++a) {
        const ExponentialFit f = fit_exponential_relaxation(t, y[a], 0.01 / span, 1000.0 / span);
        out[a].rate = -0.5 * f.rate;
        out[a].sigma = 0.5 * f.rate_sigma;
        out[a].plateau = f.plateau;
        out[a].relaxation_time = 2.0 / f.rate;
        out[a].ok = f.ok;
    }
    return out;
}

struct LoadingProtocol {
    double z_start = units::nm(500.0);
    double kinetic_at_infinity = 0.0; // J
    double cone_half_angle = 0.0;     // rad; 0 is normal incidence toward the surface
};

/// Initial state for a loading run: start on axis at z_start, heading toward
/// the surface with the speed implied by the asymptotic kinetic energy.
template <typename Pot>
AtomState loading_initial_state(const LoadingProtocol& lp, const Pot& potential, double mass, std::mt19937_64& rng)
{
    const Vec3 pos(0.0, 0.0, lp.z_start);
    const double ek = lp.kinetic_at_infinity - potential(pos).value;
    require(ek >= 0.0, "loading: kinetic energy at the start height is negative");
    const double speed = std::sqrt(2.0 * ek / mass);
    Vec3 dir(0.0, 0.0, -1.0);
    if (lp.cone_half_angle > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double cos_t = 1.0 - u(rng) * (1.0 - std::cos(lp.cone_half_angle));
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        const double phi = 2.0 * std::numbers::pi * u(rng);
        dir = Vec3(sin_t * std::cos(phi), sin_t * std::sin(phi), -cos_t);
    }
    AtomState s;
    s.position = pos;
    s.velocity = speed * dir;
    return s;
}

struct TrapProbabilityPoint {
    double kinetic_energy = 0.0; // J
    std::size_t trapped = 0;
    std::size_t trials = 0;
    double fraction = 0.0;
    BinomialInterval ci;
};

struct TrapProbabilityCurve {
    std::vector<TrapProbabilityPoint> points;
    double p0 = 0.0;
    double p0_sigma = 0.0;
    double t_eff = 0.0;       // K
    double t_eff_sigma = 0.0; // K
    bool ok = false;

    CsvTable to_csv() const
    {
        CsvTable t;
        t.comments = {"fit: P(E_k) = P0 exp(-E_k / (k_B T_eff))", "P0 = " + format_double(p0),
            "P0_sigma = " + format_double(p0_sigma), "T_eff_K = " + format_double(t_eff),
            "T_eff_sigma_K = " + format_double(t_eff_sigma), std::string("fit_ok = ") + (ok ? "true" : "false"),
            "ci_method = Clopper-Pearson exact, 95%"};
        t.header = {"Ek_uK", "trapped", "trials", "fraction", "ci_lo", "ci_hi"};
        for (const auto& p : points)
            t.rows.push_back({units::to_micro_kelvin(units::kelvin_from_energy(p.kinetic_energy)), double(p.trapped),
                double(p.trials), p.fraction, p.ci.lower, p.ci.upper});
        return t;
    }
};

/// Trap probability at the end of the run (t_max, 800 us by default in the
/// loading protocol) versus asymptotic kinetic energy, with a binomial
/// maximum-likelihood fit of P0 exp(-E_k / k_B T_eff).
template <typename Field, typename Pot>
TrapProbabilityCurve trap_probability_curve(const std::vector<double>& kinetic_energies, std::size_t n_per_point,
    const EnsembleConfig& base, const LoadingProtocol& protocol, const Field& field, const Pot& potential)
{
    TrapProbabilityCurve curve;
    std::vector<double> x;
    std::vector<std::size_t> k, n;
    for (std::size_t i = 0; i < kinetic_energies.size(); ++i) {
        EnsembleConfig cfg = base;
        cfg.count = n_per_point;
        cfg.stream_offset = base.stream_offset + i * n_per_point;
        LoadingProtocol lp = protocol;
        lp.kinetic_at_infinity = kinetic_energies[i];
        const EnsembleResult r = run_ensemble(cfg, field, potential, [&](std::size_t, std::mt19937_64& rng) {
            return loading_initial_state(lp, potential, cfg.trajectory.step.mass, rng);
        });
        TrapProbabilityPoint p;
        p.kinetic_energy = kinetic_energies[i];
        p.trapped = r.stats.trapped;
        p.trials = r.stats.n - r.stats.failures;
        p.fraction = r.stats.trapped_fraction;
        p.ci = r.stats.trapped_ci;
        curve.points.push_back(p);
        x.push_back(p.kinetic_energy);
        k.push_back(p.trapped);
        n.push_back(p.trials);
    }
    const DecayingProbabilityFit f = fit_decaying_probability(x, k, n);
    curve.p0 = f.p0;
    curve.p0_sigma = f.p0_sigma;
    curve.t_eff = units::kelvin_from_energy(f.scale);
    curve.t_eff_sigma = units::kelvin_from_energy(f.scale_sigma);
    curve.ok = f.ok;
    return curve;
}

/// rate = flux * integral of P(E) p(E; T) dE over asymptotic kinetic energy,
/// with p(E; T) = exp(-E / k_B T) / k_B T: the flux-weighted energy
/// distribution of atoms crossing a plane along one axis. P is capped at 1.
inline double loading_rate(double temperature, double flux, double p0, double t_eff)
{
    require(flux > 0.0, "loading_rate: flux must be > 0");
    require(temperature >= 0.0, "loading_rate: temperature must be >= 0");
    require(t_eff > 0.0 && p0 >= 0.0, "loading_rate: need P0 >= 0 and T_eff > 0");
    if (temperature == 0.0)
        return flux * std::min(1.0, p0);
    // u = E / k_B T, so the weight becomes exp(-u) du.
    auto integrand = [&](double u) { return std::min(1.0, p0 * std::exp(-u * temperature / t_eff)) * std::exp(-u); };
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12);
    return flux * integral;
}

} // namespace cavitycool
