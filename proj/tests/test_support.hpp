#pragma once

#include "shuttlekit/constants.hpp"
#include "shuttlekit/trajectory.hpp"

namespace sktest {

// 40Ca+, omega = 2 pi x 1.4 MHz, d = 280 um, ground mode.
inline shuttlekit::PhysicalParams fig1_params(double duration_in_periods,
                                              double delta_in_d = 0.0) {
    shuttlekit::PhysicalParams p{};
    p.mass = shuttlekit::constants::ca40_ion_mass;
    p.omega = 2.0 * shuttlekit::constants::pi * 1.4e6;
    p.distance = 280e-6;
    p.mode_n = 0;
    p.duration = duration_in_periods * 2.0 * shuttlekit::constants::pi / p.omega;
    if (delta_in_d > 0.0) p.displacement_bound = delta_in_d * p.distance;
    return p;
}

} // namespace sktest
