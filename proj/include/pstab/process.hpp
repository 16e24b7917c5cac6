#pragma once

// Single-input single-output process models used both as simulated leg
// plants and as the handles the tuning procedures probe.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace pstab {

/// First-order-plus-dead-time model K·e^{−τd s}/(τm s + 1).
struct FopdtModel {
    double gain = 1.0;           ///< K
    double dead_time = 0.0;      ///< τd, seconds
    double time_constant = 1.0;  ///< τm, seconds

    friend bool operator==(const FopdtModel&, const FopdtModel&) = default;

    void validate() const
    {
        detail::require(std::isfinite(gain) && std::isfinite(dead_time) && std::isfinite(time_constant),
                        "fopdt parameters must be finite");
        detail::require(time_constant > 0.0, "fopdt time_constant must be > 0");
        detail::require(dead_time >= 0.0, "fopdt dead_time must be >= 0");
    }

    /// Cohen–Coon applicability: dead time below twice the time constant.
    bool dead_time_rule_ok() const { return dead_time < 2.0 * time_constant; }
};

/// Uniformly sampled signal; sample k is at t = k·dt.
struct TimeSeries {
    double dt = 0.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double duration() const { return dt * static_cast<double>(values.size()); }
};

/// A plant the tuning procedures can drive: fixed sample period, one
/// input, one output measured relative to its rest value.
template <class P>
concept SisoPlant = requires(P& p, const P& cp, double u) {
    { p.step(u) } -> std::convertible_to<double>;
    { cp.output() } -> std::convertible_to<double>;
    { cp.dt() } -> std::convertible_to<double>;
    p.reset();
};

/// Number of whole samples representing a dead time at period dt.
inline std::size_t delay_samples(double dead_time, double dt)
{
    // ratios like 0.1/0.005 land a hair above the integer
    return static_cast<std::size_t>(std::ceil(dead_time / dt - 1e-9));
}

/// Integer-sample input delay line; at rest it holds zeros.
class DelayLine {
public:
    explicit DelayLine(std::size_t length = 0) : buf_(length, 0.0) {}

    /// Pushes `u`, returns the input from `length` samples ago.
    double push(double u)
    {
        if (buf_.empty()) return u;
        const double out = buf_[head_];
        buf_[head_] = u;
        head_ = (head_ + 1) % buf_.size();
        return out;
    }

    void clear()
    {
        std::fill(buf_.begin(), buf_.end(), 0.0);
        head_ = 0;
    }

    std::size_t length() const { return buf_.size(); }

private:
    std::vector<double> buf_;
    std::size_t head_ = 0;
};

/// Exact zero-order-hold discretization of a FOPDT model:
/// y ← y·e^{−dt/τm} + K·u_delayed·(1 − e^{−dt/τm}).
class FopdtProcess {
public:
    FopdtProcess(FopdtModel model, double dt) : model_(model), dt_(dt)
    {
        model_.validate();
        detail::require(std::isfinite(dt) && dt > 0.0, "fopdt dt must be > 0");
        decay_ = std::exp(-dt_ / model_.time_constant);
        delay_ = DelayLine(delay_samples(model_.dead_time, dt_));
    }

    double step(double u)
    {
        const double delayed = delay_.push(u);
        y_ = y_ * decay_ + model_.gain * delayed * (1.0 - decay_);
        return y_;
    }

    void reset()
    {
        y_ = 0.0;
        delay_.clear();
    }

    double output() const { return y_; }
    double dt() const { return dt_; }
    const FopdtModel& model() const { return model_; }

private:
    FopdtModel model_;
    double dt_;
    double decay_ = 0.0;
    DelayLine delay_;
    double y_ = 0.0;
};

/// Pure integrator with input delay, y' = K·u(t − τd). Never settles
/// under a step, so it is the reference non-self-regulating plant.
class IntegratingProcess {
public:
    IntegratingProcess(double gain, double dead_time, double dt) : gain_(gain), dt_(dt)
    {
        detail::require(std::isfinite(gain) && std::isfinite(dead_time) && dead_time >= 0.0,
                        "integrating process parameters must be finite, dead_time >= 0");
        detail::require(std::isfinite(dt) && dt > 0.0, "integrating process dt must be > 0");
        delay_ = DelayLine(delay_samples(dead_time, dt));
    }

    double step(double u)
    {
        y_ += gain_ * delay_.push(u) * dt_;
        return y_;
    }

    void reset()
    {
        y_ = 0.0;
        delay_.clear();
    }

    double output() const { return y_; }
    double dt() const { return dt_; }

private:
    double gain_;
    double dt_;
    DelayLine delay_;
    double y_ = 0.0;
};

static_assert(SisoPlant<FopdtProcess>);
static_assert(SisoPlant<IntegratingProcess>);

}  // namespace pstab
