#pragma once

namespace shuttlekit::constants {

inline constexpr double pi = 3.14159265358979323846;

// CODATA 2018
inline constexpr double hbar = 1.054571817e-34;                // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double electron_mass_u = 5.48579909065e-4;    // u

// 40Ca+ : isotope mass minus one electron
inline constexpr double ca40_ion_mass =
    (39.962590863 - electron_mass_u) * atomic_mass_unit;  // kg

inline constexpr double euler_gamma = 0.57721566490153286;

} // namespace shuttlekit::constants
