#pragma once

// Physical constants and the presentation-unit conversions used at the
// configuration boundary. Everything inside the library is SI with
// frequencies stored as angular frequencies (rad/s).

#include <numbers>

namespace cavitycool {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J/K
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Cesium D2 line defaults.
inline constexpr double cesium_mass = 2.20695e-25; // kg
inline constexpr double cesium_d2_wavelength = 852e-9; // m
} // namespace constants

namespace units {
/// Frequency given as nu in MHz (the "2pi x MHz" convention) -> rad/s.
constexpr double mhz(double nu_mhz) { return constants::two_pi * nu_mhz * 1e6; }
constexpr double to_mhz(double omega) { return omega / (constants::two_pi * 1e6); }

constexpr double nm(double v) { return v * 1e-9; }
constexpr double to_nm(double v) { return v * 1e9; }

constexpr double micro_kelvin(double v) { return v * 1e-6; }
constexpr double to_micro_kelvin(double kelvin) { return kelvin * 1e6; }

/// Energy expressed as a temperature, E = k_B T.
constexpr double energy_from_kelvin(double kelvin) { return constants::k_boltzmann * kelvin; }
constexpr double kelvin_from_energy(double joule) { return joule / constants::k_boltzmann; }
} // namespace units

} // namespace cavitycool
