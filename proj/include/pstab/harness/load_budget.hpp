#pragma once

// Servo torque to payload capacity: force at the crank, derated by
// drive efficiency and a factor of safety, expressed as liftable mass.

#include <cmath>

#include "../errors.hpp"

namespace pstab::harness {

inline constexpr double kGravity = 9.81;  // m/s²

struct LoadBudget {
    double torque = 0.0;      ///< N·m
    double crank = 0.0;       ///< m
    double efficiency = 1.0;
    double fos = 1.0;
    int legs = 3;
    double per_link_ideal = 0.0;       ///< N
    double per_link_effective = 0.0;   ///< N
    double per_link_rated_mass = 0.0;  ///< kg
    double total_rated_mass = 0.0;     ///< kg
};

inline LoadBudget compute_load_budget(double torque, double crank, double efficiency, double fos, int legs)
{
    using pstab::detail::require;
    require(std::isfinite(torque) && torque > 0.0, "load budget: torque must be > 0");
    require(std::isfinite(crank) && crank > 0.0, "load budget: crank must be > 0");
    require(std::isfinite(efficiency) && efficiency > 0.0 && efficiency <= 1.0,
            "load budget: efficiency must lie in (0, 1]");
    require(std::isfinite(fos) && fos > 0.0, "load budget: fos must be > 0");
    require(legs > 0, "load budget: legs must be > 0");

    LoadBudget b{torque, crank, efficiency, fos, legs};
    b.per_link_ideal = torque / crank;
    b.per_link_effective = b.per_link_ideal * efficiency;
    b.per_link_rated_mass = b.per_link_effective / (fos * kGravity);
    b.total_rated_mass = legs * b.per_link_rated_mass;
    return b;
}

}  // namespace pstab::harness
