#pragma once

// Force, friction and diffusion from the full truncated-space steady state,
// and the precomputed 3D coefficient grid used by the Monte-Carlo engine.

#include "cavitycool/errors.hpp"
#include "cavitycool/fields.hpp"
#include "cavitycool/parallel.hpp"
#include "cavitycool/quantum_core.hpp"
#include "cavitycool/weak_drive.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

namespace cavitycool {

struct CoefficientPoint {
    Vec3 position = Vec3::Zero();
    Vec3 force = Vec3::Zero(); // N
    Mat3 beta = Mat3::Zero();  // kg/s, friction force = beta v
    Mat3 d_dp = Mat3::Zero();  // kg^2 m^2 s^-3
    double d_se = 0.0;

    Mat3 d_total() const { return d_dp + d_se * Mat3::Identity(); }
};

/// Everything the numeric route needs at one coupling strength. Because the
/// Liouvillian depends on position only through g, the tensors at x are
/// these scalars times grad g (force) or grad g grad g^T (beta, D_dp).
struct CouplingResponse {
    double coupling_corr = 0.0;       // <a^dag sigma_- + a sigma_+>
    double friction_prefactor = 0.0;  // beta^{ij} / (d_i g d_j g)
    double diffusion_prefactor = 0.0; // D_dp^{ij} / (d_i g d_j g), includes hbar^2
    double n_bar = 0.0;
    double p_e = 0.0;
};

class NumericEvaluator {
public:
    explicit NumericEvaluator(const SystemParams& params)
        : params_(params), parts_(liouvillian_parts(params)), x1_(ops::coupling_operator(params.n_max)),
          excited_(ops::lowering(params.n_max).adjoint() * ops::lowering(params.n_max)),
          photons_(ops::annihilation(params.n_max).adjoint() * ops::annihilation(params.n_max)),
          pre_x1_(ops::spre(x1_))
    {
    }

    const SystemParams& params() const { return params_; }

    CouplingResponse response(double g) const
    {
        const int dim = params_.dim();
        const BorderedSolver solver(parts_.at(g));
        const VectorXcd rho0 = solver.steady_state_vector();
        const auto rho0_m = Eigen::Map<const MatrixXcd>(rho0.data(), dim, dim);

        CouplingResponse out;
        out.coupling_corr = (x1_ * rho0_m).trace().real();
        out.n_bar = (photons_ * rho0_m).trace().real();
        out.p_e = (excited_ * rho0_m).trace().real();

        // L d_j rho0 = -(d_j L) rho0 with d_j L = d_j g * dL/dg, then L rho1^j = d_j rho0.
        const VectorXcd drho_dg = solver.solve_traceless(-(parts_.slope * rho0));
        const VectorXcd rho1 = solver.solve_traceless(drho_dg);
        out.friction_prefactor = -constants::hbar * trace_with_x1(rho1, dim).real();

        // int_0^inf e^{Lt} dt = -L^{-1} on the traceless subspace.
        const VectorXcd fluct = pre_x1_ * rho0 - out.coupling_corr * rho0;
        const VectorXcd resolvent = solver.solve_traceless(fluct);
        out.diffusion_prefactor = -constants::hbar * constants::hbar * trace_with_x1(resolvent, dim).real();
        return out;
    }

    CoefficientPoint at(const Vec3& pos, const ModeGeometry& geom) const
    {
        const Coupling c = coupling(pos, geom);
        return assemble(pos, c, response(c.g), params_);
    }

    static CoefficientPoint assemble(const Vec3& pos, const Coupling& c, const CouplingResponse& r, const SystemParams& p)
    {
        CoefficientPoint pt;
        pt.position = pos;
        const Mat3 outer = c.grad * c.grad.transpose();
        pt.force = -constants::hbar * r.coupling_corr * c.grad;
        pt.beta = r.friction_prefactor * outer;
        pt.d_dp = r.diffusion_prefactor * outer;
        pt.d_se = constants::hbar * constants::hbar * p.k_photon * p.k_photon * p.Gamma * r.p_e;
        return pt;
    }

private:
    cd trace_with_x1(const VectorXcd& vec, int dim) const
    {
        return (x1_ * Eigen::Map<const MatrixXcd>(vec.data(), dim, dim)).trace();
    }

    SystemParams params_;
    LiouvillianParts parts_;
    MatrixXcd x1_;
    MatrixXcd excited_;
    MatrixXcd photons_;
    MatrixXcd pre_x1_;
};

inline Vec3 force_numeric(const Vec3& pos, const SystemParams& params, const ModeGeometry& geom)
{
    return NumericEvaluator(params).at(pos, geom).force;
}

inline Mat3 friction_numeric(const Vec3& pos, const SystemParams& params, const ModeGeometry& geom)
{
    const Mat3 b = NumericEvaluator(params).at(pos, geom).beta;
    return 0.5 * (b + b.transpose());
}

inline DiffusionTensors diffusion_numeric(const Vec3& pos, const SystemParams& params, const ModeGeometry& geom)
{
    const CoefficientPoint pt = NumericEvaluator(params).at(pos, geom);
    return DiffusionTensors{pt.d_dp, pt.d_se};
}

/// Weak-drive counterpart of NumericEvaluator::at.
inline CoefficientPoint weak_point(const Vec3& pos, const SystemParams& params, const ModeGeometry& geom)
{
    const Coupling c = coupling(pos, geom);
    const WeakDriveContext ctx = make_weak_context(params, c.g, c.grad);
    CoefficientPoint pt;
    pt.position = pos;
    pt.force = force_weak(ctx, params);
    pt.beta = friction_weak(ctx, params);
    const DiffusionTensors d = diffusion_weak(ctx, params);
    pt.d_dp = d.d_dp;
    pt.d_se = d.d_se;
    return pt;
}

// ---------------------------------------------------------------------------
// Grid

struct GridAxes {
    std::vector<double> x, y, z;

    std::size_t size() const { return x.size() * y.size() * z.size(); }

    void validate() const
    {
        for (const auto* axis : {&x, &y, &z}) {
            require(!axis->empty(), "grid axes must be non-empty");
            for (std::size_t i = 1; i < axis->size(); ++i)
                require((*axis)[i] > (*axis)[i - 1], "grid axes must be strictly increasing");
        }
    }
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return v;
}

class CoefficientGrid {
public:
    static constexpr std::size_t fields_per_point = 22; // force 3, beta 9, d_dp 9, d_se 1
    static constexpr std::uint32_t format_version = 1;

    CoefficientGrid() = default;
    CoefficientGrid(GridAxes axes, nlohmann::json metadata)
        : axes_(std::move(axes)), metadata_(std::move(metadata)), data_(axes_.size() * fields_per_point, 0.0)
    {
        axes_.validate();
    }

    const GridAxes& axes() const { return axes_; }
    const nlohmann::json& metadata() const { return metadata_; }
    const std::vector<double>& raw() const { return data_; }
    std::size_t point_count() const { return axes_.size(); }

    std::size_t flat_index(std::size_t ix, std::size_t iy, std::size_t iz) const
    {
        return (ix * axes_.y.size() + iy) * axes_.z.size() + iz;
    }

    Vec3 position(std::size_t flat) const
    {
        const std::size_t nz = axes_.z.size(), ny = axes_.y.size();
        return Vec3(axes_.x[flat / (ny * nz)], axes_.y[(flat / nz) % ny], axes_.z[flat % nz]);
    }

    void set(std::size_t flat, const CoefficientPoint& pt)
    {
        double* d = &data_[flat * fields_per_point];
        for (int i = 0; i < 3; ++i)
            d[i] = pt.force[i];
        for (int i = 0; i < 9; ++i) {
            d[3 + i] = pt.beta(i / 3, i % 3);
            d[12 + i] = pt.d_dp(i / 3, i % 3);
        }
        d[21] = pt.d_se;
    }

    CoefficientPoint get(std::size_t flat) const { return unpack(&data_[flat * fields_per_point], position(flat)); }

    bool contains(const Vec3& pos) const
    {
        return pos.x() >= axes_.x.front() && pos.x() <= axes_.x.back() && pos.y() >= axes_.y.front()
            && pos.y() <= axes_.y.back() && pos.z() >= axes_.z.front() && pos.z() <= axes_.z.back();
    }

    /// Componentwise trilinear interpolation; positions are clamped to the domain.
    CoefficientPoint interpolate(const Vec3& pos) const
    {
        std::array<std::size_t, 3> lo{};
        std::array<double, 3> frac{};
        const std::array<const std::vector<double>*, 3> ax{&axes_.x, &axes_.y, &axes_.z};
        for (int k = 0; k < 3; ++k)
            locate(*ax[k], pos[k], lo[k], frac[k]);

        std::array<double, fields_per_point> acc{};
        const std::size_t ny = axes_.y.size(), nz = axes_.z.size();
        for (int corner = 0; corner < 8; ++corner) {
            const std::size_t dx = corner >> 2 & 1, dy = corner >> 1 & 1, dz = corner & 1;
            const double w = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) * (dz ? frac[2] : 1.0 - frac[2]);
            if (w == 0.0)
                continue;
            const std::size_t ix = std::min(lo[0] + dx, axes_.x.size() - 1);
            const std::size_t iy = std::min(lo[1] + dy, ny - 1);
            const std::size_t iz = std::min(lo[2] + dz, nz - 1);
            const double* d = &data_[((ix * ny + iy) * nz + iz) * fields_per_point];
            for (std::size_t f = 0; f < fields_per_point; ++f)
                acc[f] += w * d[f];
        }
        return unpack(acc.data(), pos);
    }

    void save(const std::string& path) const
    {
        static_assert(std::endian::native == std::endian::little, "grid cache is little-endian");
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw ConfigError("cannot open grid cache for writing: " + path);
        const std::string meta = metadata_.dump();
        out.write(magic, sizeof(magic));
        write_pod(out, format_version);
        write_pod(out, static_cast<std::uint64_t>(meta.size()));
        out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
        for (const auto* axis : {&axes_.x, &axes_.y, &axes_.z}) {
            write_pod(out, static_cast<std::uint64_t>(axis->size()));
            out.write(reinterpret_cast<const char*>(axis->data()), static_cast<std::streamsize>(axis->size() * sizeof(double)));
        }
        out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size() * sizeof(double)));
        if (!out)
            throw ConfigError("failed writing grid cache: " + path);
    }

    /// Loads a cache and rejects it unless its metadata equals `expected`.
    static CoefficientGrid load(const std::string& path, const nlohmann::json& expected)
    {
        CoefficientGrid grid = load_unchecked(path);
        if (grid.metadata_ != expected) {
            std::ostringstream msg;
            msg << "grid cache " << path << " was built for different parameters; mismatched keys:";
            for (const auto& diff : nlohmann::json::diff(expected, grid.metadata_))
                msg << ' ' << diff.value("path", std::string("?"));
            msg << ". Rebuild it with `build-grid`.";
            throw ConfigError(msg.str());
        }
        return grid;
    }

    static CoefficientGrid load_unchecked(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ConfigError("cannot open grid cache: " + path);
        char head[sizeof(magic)];
        in.read(head, sizeof(head));
        if (!in || std::memcmp(head, magic, sizeof(magic)) != 0)
            throw ConfigError("not a coefficient grid cache: " + path);
        const auto version = read_pod<std::uint32_t>(in);
        if (version != format_version)
            throw ConfigError("unsupported grid cache version " + std::to_string(version));
        const auto meta_len = read_pod<std::uint64_t>(in);
        std::string meta(meta_len, '\0');
        in.read(meta.data(), static_cast<std::streamsize>(meta_len));
        GridAxes axes;
        for (auto* axis : {&axes.x, &axes.y, &axes.z}) {
            const auto n = read_pod<std::uint64_t>(in);
            axis->resize(n);
            in.read(reinterpret_cast<char*>(axis->data()), static_cast<std::streamsize>(n * sizeof(double)));
        }
        CoefficientGrid grid(std::move(axes), nlohmann::json::parse(meta));
        in.read(reinterpret_cast<char*>(grid.data_.data()), static_cast<std::streamsize>(grid.data_.size() * sizeof(double)));
        if (!in)
            throw ConfigError("truncated grid cache: " + path);
        return grid;
    }

private:
    static constexpr char magic[12] = {'C', 'A', 'V', 'C', 'O', 'O', 'L', 'G', 'R', 'I', 'D', '\0'};

    static void locate(const std::vector<double>& axis, double v, std::size_t& lo, double& frac)
    {
        if (axis.size() == 1 || v <= axis.front()) {
            lo = 0;
            frac = 0.0;
            return;
        }
        if (v >= axis.back()) {
            lo = axis.size() - 2;
            frac = 1.0;
            return;
        }
        const auto it = std::upper_bound(axis.begin(), axis.end(), v);
        lo = static_cast<std::size_t>(it - axis.begin()) - 1;
        frac = (v - axis[lo]) / (axis[lo + 1] - axis[lo]);
    }

    static CoefficientPoint unpack(const double* d, const Vec3& pos)
    {
        CoefficientPoint pt;
        pt.position = pos;
        pt.force = Vec3(d[0], d[1], d[2]);
        for (int i = 0; i < 9; ++i) {
            pt.beta(i / 3, i % 3) = d[3 + i];
            pt.d_dp(i / 3, i % 3) = d[12 + i];
        }
        pt.d_se = d[21];
        return pt;
    }

    template <typename T>
    static void write_pod(std::ostream& out, T value)
    {
        out.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }

    template <typename T>
    static T read_pod(std::istream& in)
    {
        T value{};
        in.read(reinterpret_cast<char*>(&value), sizeof(T));
        if (!in)
            throw ConfigError("truncated grid cache header");
        return value;
    }

    GridAxes axes_;
    nlohmann::json metadata_;
    std::vector<double> data_;
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// Dense numeric evaluation over the grid. Any failing point aborts the build
/// and reports its position.
inline CoefficientGrid build_grid(const GridAxes& axes, const SystemParams& params, const ModeGeometry& geom,
    nlohmann::json metadata, unsigned threads = 1, const ProgressCallback& progress = {})
{
    geom.validate();
    CoefficientGrid grid(axes, std::move(metadata));
    const NumericEvaluator evaluator(params);
    const std::size_t total = grid.point_count();
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(total, threads, [&](std::size_t i) {
        const Vec3 pos = grid.position(i);
        try {
            grid.set(i, evaluator.at(pos, geom));
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "coefficient evaluation failed at (" << pos.x() << ", " << pos.y() << ", " << pos.z()
                << ") m: " << e.what();
            throw NumericalError(msg.str());
        }
        const std::size_t n = ++done;
        if (progress && (n % 1000 == 0 || n == total)) {
            std::lock_guard lock(progress_mutex);
            progress(n, total);
        }
    });
    return grid;
}

} // namespace cavitycool
