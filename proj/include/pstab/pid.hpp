#pragma once

// Discrete per-leg PID with output saturation and conditional anti-windup.
// Error is in millimetres, output in degrees of servo offset.

#include <algorithm>
#include <cmath>
#include <utility>

#include "errors.hpp"

namespace pstab {

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;  ///< 1/s
    double kd = 0.0;  ///< s

    friend bool operator==(const PidGains&, const PidGains&) = default;

    void validate() const
    {
        detail::require(std::isfinite(kp) && std::isfinite(ki) && std::isfinite(kd),
                        "pid gains must be finite");
        detail::require(kp >= 0.0 && ki >= 0.0 && kd >= 0.0, "pid gains must be non-negative");
    }
};

struct OutputLimits {
    double min = -45.0;
    double max = 45.0;

    friend bool operator==(const OutputLimits&, const OutputLimits&) = default;
};

inline constexpr double kDefaultControlPeriod = 0.005;  // 200 Hz

class PidController {
public:
    PidController() : PidController(PidGains{}) {}

    explicit PidController(PidGains gains, OutputLimits limits = {}, double dt = kDefaultControlPeriod)
        : gains_(gains), limits_(limits), dt_(dt)
    {
        gains_.validate();
        detail::require(std::isfinite(dt_) && dt_ > 0.0, "pid dt must be > 0");
        detail::require(std::isfinite(limits_.min) && std::isfinite(limits_.max) && limits_.min < limits_.max,
                        "pid output limits require min < max");
    }

    /// One control tick. The integral covers the current sample, so a
    /// constant error e after n ticks contributes ki·n·dt·e. While the
    /// output is saturated and the error pushes further into saturation
    /// the integral is frozen.
    double step(double error)
    {
        detail::require(std::isfinite(error), "pid_step: non-finite error");

        const double derivative = (error - prev_error_) / dt_;
        const double pd = gains_.kp * error + gains_.kd * derivative;

        double integral = clamp_integral(integral_ + error * dt_);
        double raw = pd + gains_.ki * integral;
        if ((raw > limits_.max && error > 0.0) || (raw < limits_.min && error < 0.0)) {
            integral = integral_;
            raw = pd + gains_.ki * integral;
        }

        integral_ = integral;
        prev_error_ = error;
        return std::clamp(raw, limits_.min, limits_.max);
    }

    void reset()
    {
        integral_ = 0.0;
        prev_error_ = 0.0;
    }

    const PidGains& gains() const { return gains_; }
    const OutputLimits& limits() const { return limits_; }
    double dt() const { return dt_; }
    double integral() const { return integral_; }
    double prev_error() const { return prev_error_; }

private:
    double clamp_integral(double integral) const
    {
        if (gains_.ki <= 0.0) return integral;
        return std::clamp(integral, limits_.min / gains_.ki, limits_.max / gains_.ki);
    }

    PidGains gains_;
    OutputLimits limits_;
    double dt_;
    double integral_ = 0.0;
    double prev_error_ = 0.0;
};

/// Absolute servo command: home angle offset by the controller output,
/// clamped to the servo's travel.
inline double output_to_servo_angle(double output, double home, std::pair<double, double> range = {0.0, 180.0})
{
    detail::require(range.first >= 0.0 && range.second <= 180.0 && range.first < range.second,
                    "servo range must lie within [0, 180]");
    return std::clamp(home + output, range.first, range.second);
}

}  // namespace pstab
