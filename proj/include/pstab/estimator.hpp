#pragma once

// Median set-point selection and per-leg error signals.

#include <array>
#include <cmath>
#include <cstddef>

#include "errors.hpp"
#include "kinematics.hpp"

namespace pstab {

struct MedianChoice {
    double z_target = 0.0;
    std::size_t stationary_leg = 0;
};

/// Median of three heights and the leg that attains it. Equal values
/// resolve to the lowest leg index.
inline MedianChoice median_setpoint(const std::array<double, 3>& z)
{
    for (double v : z) detail::require(std::isfinite(v), "median_setpoint: non-finite height");
    for (std::size_t i = 0; i < 3; ++i) {
        int below = 0, above = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            if (k == i) continue;
            if (z[k] <= z[i]) ++below;
            if (z[k] >= z[i]) ++above;
        }
        if (below >= 1 && above >= 1) return {z[i], i};
    }
    // unreachable for finite input: some element is always bracketed
    return {z[0], 0};
}

/// Signed errors `z_target − z_j`; |e_j| is the absolute-difference form.
inline std::array<double, 3> error_signals(double z_target, const std::array<double, 3>& z)
{
    return {z_target - z[0], z_target - z[1], z_target - z[2]};
}

struct SetPointDecision {
    double z_target = 0.0;
    std::size_t stationary_leg = 0;
    std::array<double, 3> errors{};
};

inline SetPointDecision decide_setpoint(const RobotState& state)
{
    const auto z = state.heights();
    const auto m = median_setpoint(z);
    SetPointDecision d{m.z_target, m.stationary_leg, error_signals(m.z_target, z)};
    d.errors[m.stationary_leg] = 0.0;
    return d;
}

inline RobotState estimate_state(const EulerAngles& angles, const PlatformGeometry& geometry,
                                 double timestamp = 0.0)
{
    RobotState s = ball_joint_positions(angles, geometry);
    s.timestamp = timestamp;
    return s;
}

}  // namespace pstab
