#pragma once

// Run configuration: JSON with unit-bearing strings ("100 MHz", "850 nm",
// "45 cm/s", "-45 uK"), converted to SI once here. Unknown keys are errors.
// Frequencies are given as nu and stored as 2 pi nu.

#include "cavitycool/calibration.hpp"
#include "cavitycool/coefficients.hpp"
#include "cavitycool/errors.hpp"
#include "cavitycool/fields.hpp"
#include "cavitycool/langevin.hpp"
#include "cavitycool/quantum_core.hpp"
#include "cavitycool/units.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef CAVITYCOOL_VERSION
#define CAVITYCOOL_VERSION "unknown"
#endif

namespace cavitycool {

inline constexpr int config_format_version = 1;

inline std::string version_string() { return CAVITYCOOL_VERSION; }

enum class Dimension { frequency, length, velocity, temperature, time, c4 };

namespace detail {

struct UnitEntry {
    const char* symbol;
    double factor;
};

inline const std::vector<UnitEntry>& units_for(Dimension dim)
{
    static const std::vector<UnitEntry> freq{{"Hz", constants::two_pi}, {"kHz", constants::two_pi * 1e3},
        {"MHz", constants::two_pi * 1e6}, {"GHz", constants::two_pi * 1e9}};
    static const std::vector<UnitEntry> len{{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"µm", 1e-6}, {"nm", 1e-9}};
    static const std::vector<UnitEntry> vel{{"m/s", 1.0}, {"cm/s", 1e-2}, {"mm/s", 1e-3}};
    static const std::vector<UnitEntry> temp{{"K", 1.0}, {"mK", 1e-3}, {"uK", 1e-6}, {"µK", 1e-6}, {"nK", 1e-9}};
    static const std::vector<UnitEntry> time{{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"µs", 1e-6}, {"ns", 1e-9}};
    // C4 / hbar given as nu * length^4.
    static const std::vector<UnitEntry> c4{{"Hz um^4", constants::two_pi * constants::hbar * 1e-24},
        {"Hz m^4", constants::two_pi * constants::hbar}};
    switch (dim) {
    case Dimension::frequency:
        return freq;
    case Dimension::length:
        return len;
    case Dimension::velocity:
        return vel;
    case Dimension::temperature:
        return temp;
    case Dimension::time:
        return time;
    default:
        return c4;
    }
}

inline const char* dimension_name(Dimension dim)
{
    switch (dim) {
    case Dimension::frequency:
        return "frequency";
    case Dimension::length:
        return "length";
    case Dimension::velocity:
        return "velocity";
    case Dimension::temperature:
        return "temperature";
    case Dimension::time:
        return "time";
    default:
        return "C4/hbar";
    }
}

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

} // namespace detail

/// Parses "<number> <unit>" into SI. Temperatures come back in kelvin.
inline double parse_quantity(const std::string& text, Dimension dim, const std::string& field)
{
    const std::string s = detail::trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr == s.data())
        throw ConfigError(field + ": cannot read a number from \"" + text + "\"");
    const std::string unit = detail::trim(std::string(ptr, s.data() + s.size()));
    std::string allowed;
    for (const auto& u : detail::units_for(dim)) {
        if (unit == u.symbol)
            return value * u.factor;
        allowed += allowed.empty() ? u.symbol : std::string(", ") + u.symbol;
    }
    if (unit.empty())
        throw ConfigError(field + ": missing unit in \"" + text + "\" (" + detail::dimension_name(dim) + ", one of " + allowed + ")");
    throw ConfigError(field + ": unit \"" + unit + "\" is not a " + detail::dimension_name(dim) + " unit (one of " + allowed + ")");
}

/// Reads values by dotted path and remembers which keys were consumed and
/// whether each value came from the file or from the default.
/// Rounds to 15 significant digits so that a value typed in the config and the
/// same built-in default land on the same double after unit scaling. The
/// calibration downstream is sensitive to single-ulp differences.
inline double snap(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.15g", x);
    return std::strtod(buf, nullptr);
}

class ConfigReader {
public:
    explicit ConfigReader(const nlohmann::json& root) : root_(root)
    {
        if (!root_.is_object())
            throw ConfigError("config: top level must be a JSON object");
    }

    double quantity(const std::string& path, Dimension dim, double fallback)
    {
        const nlohmann::json* v = lookup(path);
        if (!v)
            return snap(fallback);
        if (!v->is_string())
            throw ConfigError(path + ": expected a string with unit, e.g. \"" + example(dim) + "\"");
        return snap(parse_quantity(v->get<std::string>(), dim, path));
    }

    std::vector<double> quantity_list(const std::string& path, Dimension dim, std::vector<double> fallback)
    {
        const nlohmann::json* v = lookup(path);
        if (!v) {
            for (double& x : fallback)
                x = snap(x);
            return fallback;
        }
        if (!v->is_array() || v->empty())
            throw ConfigError(path + ": expected a non-empty list of strings with units");
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            const auto& e = (*v)[i];
            const std::string where = path + "[" + std::to_string(i) + "]";
            if (!e.is_string())
                throw ConfigError(where + ": expected a string with unit");
            out.push_back(snap(parse_quantity(e.get<std::string>(), dim, where)));
        }
        return out;
    }

    double number(const std::string& path, double fallback)
    {
        const nlohmann::json* v = lookup(path);
        if (!v)
            return snap(fallback);
        if (!v->is_number())
            throw ConfigError(path + ": expected a number");
        return snap(v->get<double>());
    }

    std::uint64_t integer(const std::string& path, std::uint64_t fallback)
    {
        const nlohmann::json* v = lookup(path);
        if (!v)
            return fallback;
        if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0))
            throw ConfigError(path + ": expected a non-negative integer");
        return v->get<std::uint64_t>();
    }

    std::string text(const std::string& path, const std::string& fallback)
    {
        const nlohmann::json* v = lookup(path);
        if (!v)
            return fallback;
        if (!v->is_string())
            throw ConfigError(path + ": expected a string");
        return v->get<std::string>();
    }

    /// Throws on any key present in the file but never read.
    void reject_unknown() const
    {
        std::vector<std::string> unknown;
        collect_unknown(root_, "", unknown);
        if (!unknown.empty()) {
            std::string msg = "unknown config key(s):";
            for (const auto& k : unknown)
                msg += " " + k;
            throw ConfigError(msg);
        }
    }

    const std::map<std::string, std::string>& provenance() const { return provenance_; }

private:
    const nlohmann::json* lookup(const std::string& path)
    {
        const nlohmann::json* node = &root_;
        std::size_t start = 0;
        std::string walked;
        for (;;) {
            const std::size_t dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object())
                throw ConfigError(walked + ": expected an object");
            const auto it = node->find(key);
            walked += walked.empty() ? key : "." + key;
            if (it == node->end()) {
                provenance_[path] = "default";
                used_.insert(path);
                return nullptr;
            }
            node = &*it;
            if (dot == std::string::npos)
                break;
            used_.insert(walked);
            start = dot + 1;
        }
        if (node->is_null()) {
            provenance_[path] = "default";
            used_.insert(path);
            return nullptr;
        }
        provenance_[path] = "user";
        used_.insert(path);
        return node;
    }

    void collect_unknown(const nlohmann::json& node, const std::string& prefix, std::vector<std::string>& out) const
    {
        for (auto it = node.begin(); it != node.end(); ++it) {
            const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
            if (!used_.count(path))
                out.push_back(path);
            else if (it->is_object() && !provenance_.count(path))
                collect_unknown(*it, path, out);
        }
    }

    static std::string example(Dimension dim)
    {
        switch (dim) {
        case Dimension::frequency:
            return "100 MHz";
        case Dimension::length:
            return "850 nm";
        case Dimension::velocity:
            return "45 cm/s";
        case Dimension::temperature:
            return "324 uK";
        case Dimension::time:
            return "8 ns";
        default:
            return "267 Hz um^4";
        }
    }

    const nlohmann::json& root_;
    std::set<std::string> used_;
    std::map<std::string, std::string> provenance_;
};

// ---------------------------------------------------------------- config types

/// Cesium D2 with the cavity parameters used throughout.
inline SystemParams table_system_params()
{
    SystemParams p;
    p.kappa = units::mhz(100.0);
    p.Gamma = units::mhz(2.61);
    p.delta_a = p.delta_c = units::mhz(10.0);
    p.epsilon = units::mhz(10.0);
    p.k_photon = constants::two_pi / constants::cesium_d2_wavelength;
    p.mass = constants::cesium_mass;
    p.n_max = 4;
    return p;
}

struct ModeSpec {
    double d_len = units::nm(100.0);
    double n_eff = 1.6;
    double width = units::nm(950.0);
    double q_len = units::nm(950.0) / std::numbers::pi; // cos(y/q) vanishes at |y| = W/2
    double z_cool = units::nm(224.0);
};

struct TrapSpec {
    double d_blue = units::nm(80.0);
    double d_red = units::nm(120.0);
    double red_wavelength = 1064e-9;
    double red_n_eff = 1.6;
    double q_blue = units::nm(950.0) / std::numbers::pi;
    double q_red = units::nm(950.0) / std::numbers::pi;
    double c4 = 267.0 * constants::two_pi * constants::hbar * 1e-24;
    double lambda_tilde = units::nm(136.0);
    double z_trap = units::nm(200.0);
    double z_probe = units::nm(500.0);
    double u_probe_kelvin = units::micro_kelvin(-45.0);
};

struct RegionSpec {
    double z_min = units::nm(25.0);
    double z_max = units::nm(800.0);
};

struct GridSpec {
    std::size_t x_points = 29;
    std::size_t y_points = 39;
    std::size_t z_points = 156;
};

struct SweepSpec {
    // steady-state: photon number vs pump detuning at fixed couplings
    double detuning_lo = units::mhz(-600.0);
    double detuning_hi = units::mhz(600.0);
    std::size_t detuning_points = 1201;
    std::vector<double> couplings{units::mhz(300.0), units::mhz(10.0)};
    // force-sweep / coeff-sweep: along z at (offset_x, offset_y)
    double z_lo = units::nm(100.0);
    double z_hi = units::nm(600.0);
    std::size_t z_points = 100;
    std::vector<double> epsilons{units::mhz(0.1), units::mhz(5.0), units::mhz(10.0), units::mhz(25.0)};
    double offset_x = 0.0;
    double offset_y = 0.0;
    // teq-map; the red-detuned branch (Delta_p < 0) cools only at weak coupling and is left out
    double map_detuning_lo = units::mhz(0.15);
    double map_detuning_hi = units::mhz(30.0);
    std::size_t map_detuning_points = 200;
    double map_z_lo = units::nm(100.0);
    double map_z_hi = units::nm(600.0);
    std::size_t map_z_points = 201;
    std::size_t cross_section_resolution = 100;
};

struct MonteCarloSpec {
    double dt = 8e-9;
    std::size_t sample_stride = 10;
    std::uint64_t seed = 1;
    // in-trap cooling
    std::size_t cooling_trajectories = 50;
    double cooling_t_max = 3e-3;
    double v0 = 0.45;
    std::size_t export_trajectories = 3;
    // loading
    std::size_t loading_trajectories = 200;
    double loading_t_max = 800e-6;
    double z_start = units::nm(500.0);
    std::vector<double> kinetic_energies_kelvin{units::micro_kelvin(1.0), units::micro_kelvin(3.0),
        units::micro_kelvin(6.0), units::micro_kelvin(10.0), units::micro_kelvin(20.0), units::micro_kelvin(40.0)};
    double cone_half_angle_deg = 0.0;
    double flux_per_ms = 400.0;
    std::vector<double> rate_temperatures_kelvin{units::micro_kelvin(0.0), units::micro_kelvin(10.0),
        units::micro_kelvin(20.0), units::micro_kelvin(40.0), units::micro_kelvin(50.0), units::micro_kelvin(100.0),
        units::micro_kelvin(200.0)};
    double p0 = 0.0;     // > 0 overrides the load-sweep fit
    double t_eff_kelvin = 0.0;
};

struct RunConfig {
    SystemParams params = table_system_params();
    ModeSpec mode;
    TrapSpec trap;
    RegionSpec region;
    GridSpec grid;
    SweepSpec sweep;
    MonteCarloSpec mc;
    std::string output_dir = "out";
    std::map<std::string, std::string> provenance;

    double k_red() const { return trap.red_n_eff * constants::two_pi / trap.red_wavelength; }

    ModeGeometry geometry_template() const
    {
        ModeGeometry g;
        g.g0 = 1.0; // set by calibration
        g.k_ax = mode.n_eff * params.k_photon;
        g.q_len = mode.q_len;
        g.d_len = mode.d_len;
        return g;
    }

    TrapParams trap_template() const
    {
        TrapParams t;
        t.d_blue = trap.d_blue;
        t.d_red = trap.d_red;
        t.k_red = k_red();
        t.q_blue = trap.q_blue;
        t.q_red = trap.q_red;
        t.c4 = trap.c4;
        t.lambda_tilde = trap.lambda_tilde;
        return t;
    }

    CalibrationTargets calibration_targets() const
    {
        CalibrationTargets c;
        c.z_cool = mode.z_cool;
        c.z_trap = trap.z_trap;
        c.z_probe = trap.z_probe;
        c.u_probe = units::energy_from_kelvin(trap.u_probe_kelvin);
        return c;
    }

    EscapeRegion escape_region() const
    {
        EscapeRegion r;
        r.x_half = std::numbers::pi / (2.0 * k_red());
        r.y_half = mode.width / 2.0;
        r.z_min = region.z_min;
        r.z_max = region.z_max;
        return r;
    }

    /// The coefficient grid covers the escape region.
    GridAxes grid_axes() const
    {
        const EscapeRegion r = escape_region();
        GridAxes a;
        a.x = linspace(-r.x_half, r.x_half, grid.x_points);
        a.y = linspace(-r.y_half, r.y_half, grid.y_points);
        a.z = linspace(r.z_min, r.z_max, grid.z_points);
        return a;
    }

    /// Everything that determines the physics, in SI, as canonical JSON.
    nlohmann::json resolved() const
    {
        nlohmann::json j;
        j["format_version"] = config_format_version;
        j["system"] = {{"kappa", params.kappa}, {"Gamma", params.Gamma}, {"delta_a", params.delta_a},
            {"delta_c", params.delta_c}, {"epsilon", params.epsilon}, {"k_photon", params.k_photon}, {"mass", params.mass},
            {"n_max", params.n_max}};
        j["mode"] = {{"d", mode.d_len}, {"n_eff", mode.n_eff}, {"width", mode.width}, {"q", mode.q_len}, {"z_cool", mode.z_cool}};
        j["trap"] = {{"d_blue", trap.d_blue}, {"d_red", trap.d_red}, {"red_wavelength", trap.red_wavelength},
            {"red_n_eff", trap.red_n_eff}, {"q_blue", trap.q_blue}, {"q_red", trap.q_red}, {"c4", trap.c4},
            {"lambda_tilde", trap.lambda_tilde}, {"z_trap", trap.z_trap}, {"z_probe", trap.z_probe},
            {"u_probe_K", trap.u_probe_kelvin}};
        j["region"] = {{"z_min", region.z_min}, {"z_max", region.z_max}};
        j["grid"] = {{"x_points", grid.x_points}, {"y_points", grid.y_points}, {"z_points", grid.z_points}};
        j["sweep"] = {{"detuning_lo", sweep.detuning_lo}, {"detuning_hi", sweep.detuning_hi},
            {"detuning_points", sweep.detuning_points}, {"couplings", sweep.couplings}, {"z_lo", sweep.z_lo},
            {"z_hi", sweep.z_hi}, {"z_points", sweep.z_points}, {"epsilons", sweep.epsilons}, {"offset_x", sweep.offset_x},
            {"offset_y", sweep.offset_y}, {"map_detuning_lo", sweep.map_detuning_lo},
            {"map_detuning_hi", sweep.map_detuning_hi}, {"map_detuning_points", sweep.map_detuning_points},
            {"map_z_lo", sweep.map_z_lo}, {"map_z_hi", sweep.map_z_hi}, {"map_z_points", sweep.map_z_points},
            {"cross_section_resolution", sweep.cross_section_resolution}};
        j["monte_carlo"] = {{"dt", mc.dt}, {"sample_stride", mc.sample_stride}, {"seed", mc.seed},
            {"cooling_trajectories", mc.cooling_trajectories}, {"cooling_t_max", mc.cooling_t_max}, {"v0", mc.v0},
            {"export_trajectories", mc.export_trajectories}, {"loading_trajectories", mc.loading_trajectories},
            {"loading_t_max", mc.loading_t_max}, {"z_start", mc.z_start},
            {"kinetic_energies_K", mc.kinetic_energies_kelvin}, {"cone_half_angle_deg", mc.cone_half_angle_deg},
            {"flux_per_ms", mc.flux_per_ms}, {"rate_temperatures_K", mc.rate_temperatures_kelvin}, {"p0", mc.p0},
            {"t_eff_K", mc.t_eff_kelvin}};
        return j;
    }

    /// Metadata that a coefficient grid must match to be reused.
    nlohmann::json grid_metadata(const ModeGeometry& geom) const;

    std::string hash() const;
};

/// Floats rounded to 12 significant digits, so "3 ms" and 3e-3 compare equal
/// even when unit scaling leaves them an ulp apart.
inline nlohmann::json canonical(const nlohmann::json& j)
{
    if (j.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.12g", j.get<double>());
        return std::strtod(buf, nullptr);
    }
    if (j.is_object() || j.is_array()) {
        nlohmann::json out = j;
        for (auto it = out.begin(); it != out.end(); ++it)
            *it = canonical(*it);
        return out;
    }
    return j;
}

inline nlohmann::json RunConfig::grid_metadata(const ModeGeometry& geom) const
{
    nlohmann::json j;
    j["system"] = resolved()["system"];
    j["geometry"] = {{"g0", geom.g0}, {"k_ax", geom.k_ax}, {"q", geom.q_len}, {"d", geom.d_len}};
    j["region"] = resolved()["region"];
    j["grid"] = resolved()["grid"];
    j["x_half"] = escape_region().x_half;
    j["y_half"] = escape_region().y_half;
    j["solver"] = {{"steady_state_residual", 1e-10}, {"traceless_residual", 1e-9}, {"rcond_floor", 1e-14}};
    return canonical(j);
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[std::size_t(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline std::string RunConfig::hash() const { return fnv1a_hex(canonical(resolved()).dump()); }

inline RunConfig parse_config_json(const nlohmann::json& root)
{
    ConfigReader r(root);
    RunConfig c;

    const auto version = r.integer("format_version", config_format_version);
    if (version != std::uint64_t(config_format_version))
        throw ConfigError("format_version " + std::to_string(version) + " is not supported (expected "
            + std::to_string(config_format_version) + ")");

    using D = Dimension;
    SystemParams& p = c.params;
    p.kappa = r.quantity("system.kappa", D::frequency, p.kappa);
    p.Gamma = r.quantity("system.Gamma", D::frequency, p.Gamma);
    const double delta_p = r.quantity("system.delta_p", D::frequency, p.delta_a);
    p.delta_a = r.quantity("system.delta_a", D::frequency, delta_p);
    p.delta_c = r.quantity("system.delta_c", D::frequency, delta_p);
    p.epsilon = r.quantity("system.epsilon", D::frequency, p.epsilon);
    const double wavelength = r.quantity("system.wavelength", D::length, constants::two_pi / p.k_photon);
    p.k_photon = constants::two_pi / wavelength;
    p.mass = r.number("system.mass_kg", p.mass);
    p.n_max = static_cast<int>(r.integer("system.n_max", p.n_max));

    ModeSpec& m = c.mode;
    m.d_len = r.quantity("mode.d", D::length, m.d_len);
    m.n_eff = r.number("mode.n_eff", m.n_eff);
    m.width = r.quantity("mode.width", D::length, m.width);
    m.q_len = r.quantity("mode.q", D::length, m.width / std::numbers::pi);
    m.z_cool = r.quantity("mode.z_cool", D::length, m.z_cool);

    TrapSpec& t = c.trap;
    t.d_blue = r.quantity("trap.d_blue", D::length, t.d_blue);
    t.d_red = r.quantity("trap.d_red", D::length, t.d_red);
    t.red_wavelength = r.quantity("trap.red_wavelength", D::length, t.red_wavelength);
    t.red_n_eff = r.number("trap.red_n_eff", t.red_n_eff);
    t.q_blue = r.quantity("trap.q_blue", D::length, m.width / std::numbers::pi);
    t.q_red = r.quantity("trap.q_red", D::length, m.width / std::numbers::pi);
    t.c4 = r.quantity("trap.c4_over_hbar", D::c4, t.c4);
    t.lambda_tilde = r.quantity("trap.lambda_tilde", D::length, t.lambda_tilde);
    t.z_trap = r.quantity("trap.z_trap", D::length, t.z_trap);
    t.z_probe = r.quantity("trap.z_probe", D::length, t.z_probe);
    t.u_probe_kelvin = r.quantity("trap.u_probe", D::temperature, t.u_probe_kelvin);

    c.region.z_min = r.quantity("region.z_min", D::length, c.region.z_min);
    c.region.z_max = r.quantity("region.z_max", D::length, c.region.z_max);

    c.grid.x_points = r.integer("grid.x_points", c.grid.x_points);
    c.grid.y_points = r.integer("grid.y_points", c.grid.y_points);
    c.grid.z_points = r.integer("grid.z_points", c.grid.z_points);

    SweepSpec& s = c.sweep;
    s.detuning_lo = r.quantity("sweep.detuning_lo", D::frequency, s.detuning_lo);
    s.detuning_hi = r.quantity("sweep.detuning_hi", D::frequency, s.detuning_hi);
    s.detuning_points = r.integer("sweep.detuning_points", s.detuning_points);
    s.couplings = r.quantity_list("sweep.couplings", D::frequency, s.couplings);
    s.z_lo = r.quantity("sweep.z_lo", D::length, s.z_lo);
    s.z_hi = r.quantity("sweep.z_hi", D::length, s.z_hi);
    s.z_points = r.integer("sweep.z_points", s.z_points);
    s.epsilons = r.quantity_list("sweep.epsilons", D::frequency, s.epsilons);
    s.offset_x = r.quantity("sweep.offset_x", D::length, s.offset_x);
    s.offset_y = r.quantity("sweep.offset_y", D::length, s.offset_y);
    s.map_detuning_lo = r.quantity("sweep.map_detuning_lo", D::frequency, s.map_detuning_lo);
    s.map_detuning_hi = r.quantity("sweep.map_detuning_hi", D::frequency, s.map_detuning_hi);
    s.map_detuning_points = r.integer("sweep.map_detuning_points", s.map_detuning_points);
    s.map_z_lo = r.quantity("sweep.map_z_lo", D::length, s.map_z_lo);
    s.map_z_hi = r.quantity("sweep.map_z_hi", D::length, s.map_z_hi);
    s.map_z_points = r.integer("sweep.map_z_points", s.map_z_points);
    s.cross_section_resolution = r.integer("sweep.cross_section_resolution", s.cross_section_resolution);

    MonteCarloSpec& mc = c.mc;
    mc.dt = r.quantity("monte_carlo.dt", D::time, mc.dt);
    mc.sample_stride = r.integer("monte_carlo.sample_stride", mc.sample_stride);
    mc.seed = r.integer("monte_carlo.seed", mc.seed);
    mc.cooling_trajectories = r.integer("monte_carlo.cooling_trajectories", mc.cooling_trajectories);
    mc.cooling_t_max = r.quantity("monte_carlo.cooling_t_max", D::time, mc.cooling_t_max);
    mc.v0 = r.quantity("monte_carlo.v0", D::velocity, mc.v0);
    mc.export_trajectories = r.integer("monte_carlo.export_trajectories", mc.export_trajectories);
    mc.loading_trajectories = r.integer("monte_carlo.loading_trajectories", mc.loading_trajectories);
    mc.loading_t_max = r.quantity("monte_carlo.loading_t_max", D::time, mc.loading_t_max);
    mc.z_start = r.quantity("monte_carlo.z_start", D::length, mc.z_start);
    mc.kinetic_energies_kelvin = r.quantity_list("monte_carlo.kinetic_energies", D::temperature, mc.kinetic_energies_kelvin);
    mc.cone_half_angle_deg = r.number("monte_carlo.cone_half_angle_deg", mc.cone_half_angle_deg);
    mc.flux_per_ms = r.number("monte_carlo.flux_per_ms", mc.flux_per_ms);
    mc.rate_temperatures_kelvin = r.quantity_list("monte_carlo.rate_temperatures", D::temperature, mc.rate_temperatures_kelvin);
    mc.p0 = r.number("monte_carlo.p0", mc.p0);
    mc.t_eff_kelvin = r.quantity("monte_carlo.t_eff", D::temperature, mc.t_eff_kelvin);

    c.output_dir = r.text("output.dir", c.output_dir);

    r.reject_unknown();
    c.provenance = r.provenance();

    // Physical and structural validation; messages name the offending field.
    try {
        p.validate();
        c.geometry_template().validate();
        c.trap_template().validate_shape();
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    auto check = [](bool ok, const std::string& msg) {
        if (!ok)
            throw ConfigError("invalid config: " + msg);
    };
    check(wavelength > 0.0, "system.wavelength must be > 0");
    check(m.n_eff > 0.0 && t.red_n_eff > 0.0, "effective indices must be > 0");
    check(m.width > 0.0, "mode.width must be > 0");
    check(c.region.z_min > 0.0 && c.region.z_max > c.region.z_min, "region needs 0 < z_min < z_max");
    check(t.z_trap > c.region.z_min && t.z_trap < c.region.z_max, "trap.z_trap must lie inside the region");
    check(c.grid.x_points >= 2 && c.grid.y_points >= 2 && c.grid.z_points >= 2, "grid needs >= 2 points per axis");
    check(s.detuning_points >= 1 && s.z_points >= 2 && s.map_detuning_points >= 1 && s.map_z_points >= 1,
        "sweep point counts must be positive (z_points >= 2)");
    check(s.z_lo > 0.0 && s.z_hi > s.z_lo, "sweep needs 0 < z_lo < z_hi");
    check(s.map_z_lo > 0.0 && s.map_z_hi >= s.map_z_lo, "sweep needs 0 < map_z_lo <= map_z_hi");
    check(s.cross_section_resolution >= 2, "sweep.cross_section_resolution must be >= 2");
    for (double e : s.epsilons)
        check(e >= 0.0, "sweep.epsilons must be >= 0");
    check(mc.dt > 0.0, "monte_carlo.dt must be > 0");
    check(mc.dt <= 20e-9, "monte_carlo.dt must be <= 20 ns (stability guard)");
    check(mc.sample_stride >= 1, "monte_carlo.sample_stride must be >= 1");
    check(mc.cooling_trajectories >= 1 && mc.loading_trajectories >= 1, "trajectory counts must be >= 1");
    check(mc.cooling_t_max > mc.dt && mc.loading_t_max > mc.dt, "t_max must exceed dt");
    check(mc.v0 >= 0.0, "monte_carlo.v0 must be >= 0");
    check(mc.z_start > c.region.z_min && mc.z_start < c.region.z_max, "monte_carlo.z_start must lie inside the region");
    for (double e : mc.kinetic_energies_kelvin)
        check(e >= 0.0, "monte_carlo.kinetic_energies must be >= 0");
    for (double e : mc.rate_temperatures_kelvin)
        check(e >= 0.0, "monte_carlo.rate_temperatures must be >= 0");
    check(mc.cone_half_angle_deg >= 0.0 && mc.cone_half_angle_deg < 90.0, "monte_carlo.cone_half_angle_deg must be in [0, 90)");
    check(mc.flux_per_ms > 0.0, "monte_carlo.flux_per_ms must be > 0");
    check(mc.p0 >= 0.0 && mc.p0 < 1.0 && mc.t_eff_kelvin >= 0.0, "monte_carlo.p0 must be in [0, 1) and t_eff >= 0");
    return c;
}

/// Empty files are the all-defaults config.
inline RunConfig parse_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        return parse_config_json(nlohmann::json::object());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config_json(root);
}

} // namespace cavitycool
