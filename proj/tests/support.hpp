#pragma once

#include "cavitycool/quantum_core.hpp"
#include "cavitycool/units.hpp"

#include <algorithm>
#include <cmath>

namespace cctest {

inline cavitycool::SystemParams table_one(double epsilon_mhz = 10.0, int n_max = 4)
{
    using namespace cavitycool;
    SystemParams p;
    p.kappa = units::mhz(100.0);
    p.Gamma = units::mhz(2.61);
    p.delta_a = p.delta_c = units::mhz(10.0);
    p.epsilon = units::mhz(epsilon_mhz);
    p.k_photon = constants::two_pi / 852e-9;
    p.mass = constants::cesium_mass;
    p.n_max = n_max;
    return p;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace cctest
