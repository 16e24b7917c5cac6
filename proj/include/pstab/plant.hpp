#pragma once

// Simulated mechanism closing the control loop: rate-limited lagged
// servos, crank/link leg geometry, plate-plane reconstruction from leg
// heights, disturbance profiles and the 200 Hz closed-loop runner.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "estimator.hpp"
#include "kinematics.hpp"
#include "pid.hpp"
#include "process.hpp"

namespace pstab {

// ---------------------------------------------------------------------------
// Servo

struct ServoModel {
    double angle = 45.0;         ///< degrees
    double rate_limit = 600.0;   ///< deg/s (0.1 s per 60°)
    double lag_tau = 0.02;       ///< seconds
    double range_min = 0.0;
    double range_max = 180.0;

    friend bool operator==(const ServoModel&, const ServoModel&) = default;

    void validate() const
    {
        detail::require(std::isfinite(rate_limit) && rate_limit > 0.0, "servo.rate_limit must be > 0");
        detail::require(std::isfinite(lag_tau) && lag_tau > 0.0, "servo.lag_tau must be > 0");
        detail::require(range_min >= 0.0 && range_max <= 180.0 && range_min < range_max,
                        "servo range must satisfy 0 <= range_min < range_max <= 180");
    }
};

/// First-order lag toward `command` with a slew-rate ceiling. A single
/// step never carries the angle past the command.
inline double servo_update(ServoModel& servo, double command, double dt)
{
    detail::require(std::isfinite(dt) && dt > 0.0, "servo_update: dt must be > 0");
    const double gap = command - servo.angle;
    const double rate = std::clamp(gap / servo.lag_tau, -servo.rate_limit, servo.rate_limit);
    double move = rate * dt;
    if (std::abs(move) > std::abs(gap)) move = gap;
    servo.angle = std::clamp(servo.angle + move, servo.range_min, servo.range_max);
    return servo.angle;
}

// ---------------------------------------------------------------------------
// Leg

struct LegMechanism {
    double crank = 15.0;  ///< r, link-1
    double link = 79.0;   ///< L, link-2

    void validate() const
    {
        detail::require(std::isfinite(crank) && crank > 0.0, "leg crank must be > 0");
        detail::require(std::isfinite(link) && link > crank, "leg link must exceed crank");
    }
};

/// Ball-joint height above the servo axis for crank angle `theta_deg`
/// with a vertical link: z = r·sinθ + √(L² − r²cos²θ).
inline double leg_z(double theta_deg, const LegMechanism& mech)
{
    const double th = deg_to_rad(theta_deg);
    const double rc = mech.crank * std::cos(th);
    return mech.crank * std::sin(th) + std::sqrt(mech.link * mech.link - rc * rc);
}

/// Plate tilt from the three ball-joint heights. Fits z = a·x + b·y + c
/// through the joints' plate-frame (x, y) and inverts the height row of
/// the plate rotation, a = −sin(pitch), b = cos(pitch)·sin(roll).
/// Yaw cannot be observed from heights and is returned as 0.
inline EulerAngles plate_from_leg_heights(const std::array<double, 3>& z, const std::array<Vec3, 3>& joint_xy)
{
    const double x0 = joint_xy[0].x, y0 = joint_xy[0].y;
    const double dx1 = joint_xy[1].x - x0, dy1 = joint_xy[1].y - y0, dz1 = z[1] - z[0];
    const double dx2 = joint_xy[2].x - x0, dy2 = joint_xy[2].y - y0, dz2 = z[2] - z[0];
    const double det = dx1 * dy2 - dx2 * dy1;
    if (!(std::abs(det) > 1e-12)) throw ValidationError("plate_from_leg_heights: joints are collinear");

    const double a = (dz1 * dy2 - dz2 * dy1) / det;
    const double b = (dx1 * dz2 - dx2 * dz1) / det;
    if (!(std::abs(a) < 1.0)) throw ModelError("plate_from_leg_heights: pitch out of reach");
    const double pitch = std::asin(-a);
    const double s = b / std::cos(pitch);
    if (!(std::abs(s) < 1.0)) throw ModelError("plate_from_leg_heights: roll out of reach");
    return {0.0, pitch, std::asin(s)};
}

/// Input: servo command offset from home (deg). Output: ball-joint height
/// change from the home height (mm). The per-leg channel the tuners see
/// when the mechanistic plant is selected.
class ServoLegProcess {
public:
    ServoLegProcess(ServoModel servo, LegMechanism mech, double home, double dt)
        : proto_(servo), mech_(mech), home_(home), dt_(dt)
    {
        proto_.validate();
        mech_.validate();
        detail::require(std::isfinite(dt) && dt > 0.0, "servo leg dt must be > 0");
        proto_.angle = home_;
        servo_ = proto_;
        z_home_ = leg_z(home_, mech_);
    }

    double step(double u)
    {
        const double cmd = output_to_servo_angle(u, home_, {proto_.range_min, proto_.range_max});
        servo_update(servo_, cmd, dt_);
        y_ = leg_z(servo_.angle, mech_) - z_home_;
        return y_;
    }

    void reset()
    {
        servo_ = proto_;
        y_ = 0.0;
    }

    double output() const { return y_; }
    double dt() const { return dt_; }

private:
    ServoModel proto_;
    ServoModel servo_;
    LegMechanism mech_;
    double home_;
    double dt_;
    double z_home_ = 0.0;
    double y_ = 0.0;
};

static_assert(SisoPlant<ServoLegProcess>);

// ---------------------------------------------------------------------------
// Disturbance

/// Orientation of the rocket frame over time.
struct DisturbanceProfile {
    enum class Kind { none, step, sine_sweep, recorded };

    struct Sample {
        double t = 0.0;
        EulerAngles angles;

        friend bool operator==(const Sample&, const Sample&) = default;
    };

    Kind kind = Kind::none;
    EulerAngles amplitude;      ///< radians per axis
    double start_time = 0.0;    ///< seconds; zero disturbance before this
    double freq_start = 0.1;    ///< Hz
    double freq_end = 5.0;      ///< Hz
    double sweep_time = 10.0;   ///< seconds to go from freq_start to freq_end
    std::uint64_t seed = 0;
    bool random_phase = false;  ///< per-axis phase drawn from `seed`
    std::vector<Sample> recorded;

    friend bool operator==(const DisturbanceProfile&, const DisturbanceProfile&) = default;

    void validate() const
    {
        detail::require(is_finite(amplitude), "disturbance amplitude must be finite");
        detail::require(std::abs(amplitude.pitch) < std::numbers::pi / 2 &&
                            std::abs(amplitude.roll) < std::numbers::pi / 2 &&
                            std::abs(amplitude.yaw) < std::numbers::pi,
                        "disturbance amplitude out of range");
        detail::require(std::isfinite(start_time) && start_time >= 0.0, "disturbance.start_time must be >= 0");
        if (kind == Kind::sine_sweep) {
            detail::require(std::isfinite(freq_start) && std::isfinite(freq_end) && freq_start > 0.0 &&
                                freq_end > 0.0,
                            "disturbance frequencies must be > 0");
            detail::require(std::isfinite(sweep_time) && sweep_time > 0.0, "disturbance.sweep_time must be > 0");
        }
        if (kind == Kind::recorded) {
            detail::require(!recorded.empty(), "recorded disturbance needs samples");
            for (std::size_t i = 1; i < recorded.size(); ++i)
                detail::require(recorded[i].t > recorded[i - 1].t, "recorded disturbance time must increase");
        }
    }

    EulerAngles sample(double t) const
    {
        switch (kind) {
        case Kind::none:
            return {};
        case Kind::step:
            return t >= start_time ? amplitude : EulerAngles{};
        case Kind::sine_sweep: {
            if (t < start_time) return {};
            const double phase = sweep_phase(t - start_time);
            const auto ph = phases();
            return {amplitude.yaw * std::sin(phase + ph[0]), amplitude.pitch * std::sin(phase + ph[1]),
                    amplitude.roll * std::sin(phase + ph[2])};
        }
        case Kind::recorded:
            return interpolate(t);
        }
        return {};
    }

private:
    // 2π∫f dt for a linear chirp that holds freq_end after sweep_time.
    double sweep_phase(double tau) const
    {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        const double slope = (freq_end - freq_start) / sweep_time;
        if (tau <= sweep_time) return two_pi * (freq_start * tau + 0.5 * slope * tau * tau);
        const double at_end = freq_start * sweep_time + 0.5 * slope * sweep_time * sweep_time;
        return two_pi * (at_end + freq_end * (tau - sweep_time));
    }

    std::array<double, 3> phases() const
    {
        if (!random_phase) return {0.0, 0.0, 0.0};
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
        const double a = u(rng), b = u(rng), c = u(rng);
        return {a, b, c};
    }

    EulerAngles interpolate(double t) const
    {
        if (t <= recorded.front().t) return recorded.front().angles;
        if (t >= recorded.back().t) return recorded.back().angles;
        const auto it = std::upper_bound(recorded.begin(), recorded.end(), t,
                                         [](double v, const Sample& s) { return v < s.t; });
        const Sample& hi = *it;
        const Sample& lo = *(it - 1);
        const double w = (t - lo.t) / (hi.t - lo.t);
        auto mix = [w](double a, double b) { return a + w * (b - a); };
        return {mix(lo.angles.yaw, hi.angles.yaw), mix(lo.angles.pitch, hi.angles.pitch),
                mix(lo.angles.roll, hi.angles.roll)};
    }
};

// ---------------------------------------------------------------------------
// Closed loop

enum class PlantKind { mechanistic, fopdt, integrating };

inline std::string_view to_string(PlantKind k)
{
    switch (k) {
    case PlantKind::mechanistic: return "mechanistic";
    case PlantKind::fopdt: return "fopdt";
    case PlantKind::integrating: return "integrating";
    }
    return "?";
}

struct SimulationConfig {
    PlatformGeometry geometry = PlatformGeometry::defaults();
    ServoModel servo;
    PlantKind plant = PlantKind::mechanistic;
    /// Per-leg process for the fopdt / integrating plant kinds: input is the
    /// controller output in degrees, output the leg height change in mm.
    /// The integrating kind uses gain and dead_time only.
    std::array<FopdtModel, 3> leg_models{};
    std::array<PidGains, 3> gains{};
    OutputLimits output_limits;
    DisturbanceProfile disturbance;
    double duration = 10.0;
    double dt = kDefaultControlPeriod;
    std::uint64_t seed = 1;
    double noise_sigma = 0.0;  ///< rad, additive on the measured plate angles

    friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;

    LegMechanism leg() const { return {geometry.crank_length, geometry.link_length}; }

    void validate() const
    {
        geometry.validate();
        servo.validate();
        detail::require(std::isfinite(dt) && dt > 0.0, "run.dt must be > 0");
        detail::require(std::isfinite(duration) && duration > 0.0, "run.duration must be > 0");
        detail::require(duration / dt < 1e8, "run.duration / run.dt is too large");
        detail::require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "noise.sigma must be >= 0");
        detail::require(std::isfinite(output_limits.min) && std::isfinite(output_limits.max) &&
                            output_limits.min < output_limits.max,
                        "gains output limits require min < max");
        for (const auto& g : gains) g.validate();
        if (plant != PlantKind::mechanistic)
            for (const auto& m : leg_models) m.validate();
        disturbance.validate();
    }
};

struct TraceRow {
    double t = 0.0;
    EulerAngles rocket;
    double plate_pitch = 0.0, plate_roll = 0.0;
    std::array<double, 3> z{};
    double zo = 0.0;
    std::array<double, 3> e{};
    std::array<double, 3> u{};
    std::array<double, 3> theta{};
};

struct SimulationTrace {
    double dt = 0.0;
    std::vector<TraceRow> rows;
};

inline constexpr std::string_view kTraceHeader =
    "t,rocket_yaw,rocket_pitch,rocket_roll,plate_pitch,plate_roll,z1,z2,z3,zo,e1,e2,e3,u1,u2,u3,theta1,theta2,theta3";

inline void write_trace_csv(std::ostream& os, const SimulationTrace& trace)
{
    os << kTraceHeader << '\n';
    char buf[32];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        os << buf << sep;
    };
    for (const auto& r : trace.rows) {
        put(r.t, ',');
        put(r.rocket.yaw, ',');
        put(r.rocket.pitch, ',');
        put(r.rocket.roll, ',');
        put(r.plate_pitch, ',');
        put(r.plate_roll, ',');
        for (double v : r.z) put(v, ',');
        put(r.zo, ',');
        for (double v : r.e) put(v, ',');
        for (double v : r.u) put(v, ',');
        put(r.theta[0], ',');
        put(r.theta[1], ',');
        put(r.theta[2], '\n');
    }
}

/// Plate orientation in the world: rocket attitude composed with the
/// plate's tilt relative to the rocket-fixed base.
inline EulerAngles world_plate_angles(const EulerAngles& rocket, const EulerAngles& relative)
{
    return euler_from_transform(compose(rotation_transform(rocket, 0.0), rotation_transform(relative, 0.0)));
}

/// Runs the loop: disturbance → plate tilt → state estimate → median
/// set-point → PID on the two non-median legs → servos → leg heights.
/// The median leg's controller is not stepped that tick and its last
/// output is held.
inline SimulationTrace simulate_closed_loop(const SimulationConfig& cfg)
{
    cfg.validate();

    const LegMechanism mech = cfg.leg();
    const double home = cfg.geometry.servo_home;
    const double z_home = leg_z(home, mech);
    const std::pair<double, double> range{cfg.servo.range_min, cfg.servo.range_max};

    std::array<PidController, 3> pid;
    std::array<ServoModel, 3> servos;
    std::vector<FopdtProcess> fopdt;
    std::vector<IntegratingProcess> integ;
    for (std::size_t j = 0; j < 3; ++j) {
        pid[j] = PidController(cfg.gains[j], cfg.output_limits, cfg.dt);
        servos[j] = cfg.servo;
        servos[j].angle = home;
        if (cfg.plant == PlantKind::fopdt) fopdt.emplace_back(cfg.leg_models[j], cfg.dt);
        if (cfg.plant == PlantKind::integrating)
            integ.emplace_back(cfg.leg_models[j].gain, cfg.leg_models[j].dead_time, cfg.dt);
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::array<double, 3> heights{z_home, z_home, z_home};
    std::array<double, 3> output{};
    std::array<double, 3> theta{home, home, home};

    const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt));
    SimulationTrace trace;
    trace.dt = cfg.dt;
    trace.rows.reserve(steps);

    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        TraceRow row;
        row.t = t;
        row.rocket = cfg.disturbance.sample(t);

        const EulerAngles relative = plate_from_leg_heights(heights, cfg.geometry.joint_top);
        const EulerAngles plate = world_plate_angles(row.rocket, relative);
        row.plate_pitch = plate.pitch;
        row.plate_roll = plate.roll;

        EulerAngles measured = plate;
        if (cfg.noise_sigma > 0.0) {
            measured.yaw += cfg.noise_sigma * noise(rng);
            measured.pitch += cfg.noise_sigma * noise(rng);
            measured.roll += cfg.noise_sigma * noise(rng);
        }

        const RobotState state = estimate_state(measured, cfg.geometry, t);
        const SetPointDecision sp = decide_setpoint(state);
        row.z = state.heights();
        row.zo = sp.z_target;
        row.e = sp.errors;

        for (std::size_t j = 0; j < 3; ++j) {
            if (j != sp.stationary_leg) output[j] = pid[j].step(sp.errors[j]);

            switch (cfg.plant) {
            case PlantKind::mechanistic:
                servo_update(servos[j], output_to_servo_angle(output[j], home, range), cfg.dt);
                theta[j] = servos[j].angle;
                heights[j] = leg_z(theta[j], mech);
                break;
            case PlantKind::fopdt:
                theta[j] = output_to_servo_angle(output[j], home, range);
                heights[j] = z_home + fopdt[j].step(output[j]);
                break;
            case PlantKind::integrating:
                theta[j] = output_to_servo_angle(output[j], home, range);
                heights[j] = z_home + integ[j].step(output[j]);
                break;
            }
        }
        row.u = output;
        row.theta = theta;
        trace.rows.push_back(row);
    }
    return trace;
}

}  // namespace pstab
