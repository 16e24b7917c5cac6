#pragma once

// PID tuning: Ziegler–Nichols closed-loop rules, Cohen–Coon relations with
// two-point FOPDT identification, an ultimate-gain search over a plant
// handle, and an iterative open-loop-then-adjust custom procedure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "pid.hpp"
#include "process.hpp"

namespace pstab {

enum class ControllerType { P, PI, PD, PID };

inline std::string_view to_string(ControllerType t)
{
    switch (t) {
    case ControllerType::P: return "P";
    case ControllerType::PI: return "PI";
    case ControllerType::PD: return "PD";
    case ControllerType::PID: return "PID";
    }
    return "?";
}

inline ControllerType parse_controller_type(std::string_view s)
{
    if (s == "P") return ControllerType::P;
    if (s == "PI") return ControllerType::PI;
    if (s == "PD") return ControllerType::PD;
    if (s == "PID") return ControllerType::PID;
    throw ValidationError("unknown controller type '" + std::string(s) + "'");
}

/// Gains in ideal form; ki = kp/ti and kd = kp·td where the rule defines
/// ti / td.
struct TuningOutput {
    ControllerType type = ControllerType::P;
    double kp = 0.0;
    std::optional<double> ti;
    std::optional<double> td;

    double ki() const { return ti ? kp / *ti : 0.0; }
    double kd() const { return td ? kp * *td : 0.0; }
    PidGains gains() const { return {kp, ki(), kd()}; }
};

struct UltimateGainResult {
    double ku = 0.0;
    double tu = 0.0;  ///< seconds

    friend bool operator==(const UltimateGainResult&, const UltimateGainResult&) = default;
};

// ---------------------------------------------------------------------------
// Rule tables

inline TuningOutput zn_gains(double ku, double tu, ControllerType type)
{
    detail::require(std::isfinite(ku) && ku > 0.0, "zn_gains: ku must be > 0");
    detail::require(std::isfinite(tu) && tu > 0.0, "zn_gains: tu must be > 0");
    TuningOutput out;
    out.type = type;
    switch (type) {
    case ControllerType::P:
        out.kp = ku / 2.0;
        break;
    case ControllerType::PI:
        out.kp = ku / 2.2;
        out.ti = tu / 1.2;
        break;
    case ControllerType::PID:
        out.kp = ku / 1.7;
        out.ti = tu / 2.0;
        out.td = tu / 8.0;
        break;
    case ControllerType::PD:
        throw ValidationError("zn_gains: the Ziegler-Nichols table has no PD row");
    }
    return out;
}

/// Cohen–Coon relations, every row evaluated as tabulated.
inline TuningOutput cohen_coon_gains(const FopdtModel& m, ControllerType type)
{
    m.validate();
    detail::require(m.gain > 0.0, "cohen_coon_gains: process gain must be > 0");
    detail::require(m.dead_time > 0.0, "cohen_coon_gains: dead time must be > 0 (relations divide by it)");
    if (!m.dead_time_rule_ok())
        throw ValidationError("cohen_coon_gains: dead time must be less than twice the time constant");

    const double K = m.gain, td = m.dead_time, tm = m.time_constant;
    const double r = td / tm;
    const double base = tm / (K * td);

    TuningOutput out;
    out.type = type;
    switch (type) {
    case ControllerType::P:
        out.kp = base * (1.0 + td / (3.0 * tm));
        break;
    case ControllerType::PI:
        out.kp = base * (0.9 + td / (12.0 * tm));
        out.ti = td * (30.0 + 3.0 * r) / (9.0 + 20.0 * r);
        break;
    case ControllerType::PD:
        out.kp = base * (1.25 + td / (6.0 * tm));
        out.td = td * (6.0 - 2.0 * r) / (22.0 + 3.0 * r);
        break;
    case ControllerType::PID:
        out.kp = base * (1.0 + td / (3.0 * tm));
        out.ti = td * (32.0 + 6.0 * r) / (13.0 + 8.0 * r);
        out.td = td * 4.0 / (11.0 + 2.0 * r);
        break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Identification

// 28.3% and 63.2% of the final value, carried at full precision so the
// two-point relations are exact for a first-order-plus-dead-time response.
inline const double kLowerCrossing = 1.0 - std::exp(-1.0 / 3.0);
inline const double kUpperCrossing = 1.0 - std::exp(-1.0);

namespace detail {

inline double mean(std::span<const double> v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double stddev(std::span<const double> v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Interpolated time at which the normalized response first reaches `level`.
inline std::optional<double> first_crossing(std::span<const double> p, double dt, double level)
{
    for (std::size_t k = 1; k < p.size(); ++k) {
        if (p[k - 1] < level && p[k] >= level) {
            const double w = (level - p[k - 1]) / (p[k] - p[k - 1]);
            return (static_cast<double>(k - 1) + w) * dt;
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Two-point FOPDT identification from an open-loop step response that
/// starts at rest at t = 0.
///
/// K is the settled output change over the input step. t1 and t2 are the
/// times the response reaches 28.3% and 63.2% of that change, giving
/// τm = 1.5 (t2 − t1) and τd = t2 − τm. The crossing times come from a
/// weighted straight-line fit of −ln(1 − p) against t over the 10–80%
/// rise, which passes through the exact crossings of a clean first-order
/// response and averages sensor noise out of a noisy one. Short rises
/// (fewer than 4 samples in band) fall back to interpolated first
/// crossings.
inline FopdtModel fit_fopdt(const TimeSeries& response, double input_step)
{
    const auto& y = response.values;
    detail::require(std::isfinite(response.dt) && response.dt > 0.0, "fit_fopdt: dt must be > 0");
    detail::require(std::isfinite(input_step) && input_step != 0.0, "fit_fopdt: input step must be non-zero");
    detail::require(y.size() >= 20, "fit_fopdt: series too short");
    for (double v : y) detail::require(std::isfinite(v), "fit_fopdt: non-finite sample");

    const std::size_t n = y.size();
    const std::size_t seg = std::max<std::size_t>(n / 10, 2);
    const std::span<const double> all(y);
    const auto last = all.subspan(n - seg);
    const auto before = all.subspan(n - 2 * seg, seg);

    const double y0 = y.front();
    const double final_value = detail::mean(last);
    const double delta = final_value - y0;
    const double noise = detail::stddev(last);
    if (!(std::abs(delta) > std::max(1e-12 * (std::abs(y0) + 1.0), 4.0 * noise)))
        throw ModelError("fit_fopdt: response shows no change (zero gain)");

    const double band = 0.02 * std::abs(delta) + 4.0 * noise / std::sqrt(static_cast<double>(seg));
    if (std::abs(detail::mean(before) - final_value) > band)
        throw ModelError("fit_fopdt: series too short, response has not settled");
    const double spread = 0.05 * std::abs(delta) + 5.0 * noise;
    for (double v : all.subspan(n - 3 * seg))
        if (std::abs(v - final_value) > spread)
            throw ModelError("fit_fopdt: final segment is not monotone / settled beyond the noise band");

    auto identify = [&](double base) {
        const double rise = final_value - base;
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = (y[k] - base) / rise;

        // weighted fit  w = α + β t  with  w = −ln(1 − p),  weight (1 − p)²
        double sw = 0, st = 0, sww = 0, stt = 0, stw = 0;
        std::size_t in_band = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (p[k] < 0.10 || p[k] > 0.80) continue;
            const double t = static_cast<double>(k) * response.dt;
            const double w = -std::log(1.0 - p[k]);
            const double wt = (1.0 - p[k]) * (1.0 - p[k]);
            sw += wt;
            st += wt * t;
            sww += wt * w;
            stt += wt * t * t;
            stw += wt * t * w;
            ++in_band;
        }

        double t1 = 0.0, t2 = 0.0;
        const double var_t = stt * sw - st * st;
        if (in_band >= 4 && var_t > 0.0) {
            const double beta = (stw * sw - st * sww) / var_t;
            const double alpha = (sww - beta * st) / sw;
            if (!(beta > 0.0)) throw ModelError("fit_fopdt: response does not rise toward its final value");
            t1 = (-std::log(1.0 - kLowerCrossing) - alpha) / beta;
            t2 = (-std::log(1.0 - kUpperCrossing) - alpha) / beta;
        } else {
            const auto c1 = detail::first_crossing(p, response.dt, kLowerCrossing);
            const auto c2 = detail::first_crossing(p, response.dt, kUpperCrossing);
            if (!c1 || !c2) throw ModelError("fit_fopdt: response never crosses the identification levels");
            t1 = *c1;
            t2 = *c2;
        }

        FopdtModel m;
        m.gain = rise / input_step;
        m.time_constant = 1.5 * (t2 - t1);
        m.dead_time = std::max(0.0, t2 - m.time_constant);
        return m;
    };

    // The first sample alone is a noisy rest level; once a dead time is
    // known, average everything comfortably before it and identify again.
    FopdtModel m = identify(y0);
    if (m.time_constant > 0.0 && noise > 0.0) {
        const auto quiet = static_cast<std::size_t>(0.8 * m.dead_time / response.dt);
        if (quiet > 1) m = identify(detail::mean(all.first(std::min(quiet, n - 3 * seg))));
    }
    if (!(m.time_constant > 0.0)) throw ModelError("fit_fopdt: identified time constant is not positive");
    return m;
}

// ---------------------------------------------------------------------------
// Oscillation analysis

enum class EnvelopeTrend { decaying, sustained, growing };

inline std::string_view to_string(EnvelopeTrend t)
{
    switch (t) {
    case EnvelopeTrend::decaying: return "decaying";
    case EnvelopeTrend::sustained: return "sustained";
    case EnvelopeTrend::growing: return "growing";
    }
    return "?";
}

struct EnvelopeThresholds {
    double sustained_low = 0.95;
    double sustained_high = 1.05;
};

struct EnvelopeAnalysis {
    EnvelopeTrend trend = EnvelopeTrend::decaying;
    double cycle_ratio = 0.0;  ///< amplitude ratio between consecutive cycles
    std::size_t half_cycles = 0;
};

/// Classifies the oscillation envelope of `signal` about the mean of its
/// second half from the per-half-cycle peak amplitudes.
inline EnvelopeAnalysis classify_envelope(std::span<const double> signal, EnvelopeThresholds th = {})
{
    detail::require(signal.size() >= 8, "classify_envelope: signal too short");
    const double m = detail::mean(signal.subspan(signal.size() / 2));

    std::vector<double> amps;
    double peak = 0.0;
    double current = 0.0;
    bool positive = signal[0] - m >= 0.0;
    bool first = true;
    for (double s : signal) {
        const double x = s - m;
        if (!std::isfinite(x)) break;
        const bool pos = x >= 0.0;
        if (pos != positive) {
            if (!first) amps.push_back(current);
            first = false;
            current = 0.0;
            positive = pos;
        }
        current = std::max(current, std::abs(x));
        peak = std::max(peak, std::abs(x));
    }

    // drop half-cycles lost in round-off once an oscillation has died out
    std::erase_if(amps, [&](double a) { return !(a > 1e-9 * peak); });

    EnvelopeAnalysis out;
    out.half_cycles = amps.size();
    if (amps.size() < 4) {
        const auto tail = signal.subspan(signal.size() * 3 / 4);
        double tail_peak = 0.0;
        for (double s : tail) tail_peak = std::max(tail_peak, std::abs(s - m));
        if (!(peak > 0.0) || tail_peak <= 0.05 * peak) {
            out.trend = EnvelopeTrend::decaying;
            return out;
        }
        throw ModelError("classify_envelope: dwell too short to classify the oscillation");
    }

    // least-squares slope of ln(amplitude) per half-cycle
    const double nh = static_cast<double>(amps.size());
    double si = 0, sl = 0, sii = 0, sil = 0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        const double li = std::log(amps[i]);
        const double fi = static_cast<double>(i);
        si += fi;
        sl += li;
        sii += fi * fi;
        sil += fi * li;
    }
    const double slope = (nh * sil - si * sl) / (nh * sii - si * si);
    out.cycle_ratio = std::exp(2.0 * slope);
    if (out.cycle_ratio < th.sustained_low)
        out.trend = EnvelopeTrend::decaying;
    else if (out.cycle_ratio > th.sustained_high)
        out.trend = EnvelopeTrend::growing;
    else
        out.trend = EnvelopeTrend::sustained;
    return out;
}

/// Oscillation period from mean crossings. Crossings are registered with
/// hysteresis (the signal must travel 10% of its RMS swing past the mean)
/// so noise near the mean does not count extra crossings; each crossing
/// time is linearly interpolated. Period = 2 × mean half-cycle spacing.
inline double measure_oscillation_period(std::span<const double> signal, double dt)
{
    detail::require(std::isfinite(dt) && dt > 0.0, "measure_oscillation_period: dt must be > 0");
    if (signal.size() < 3) throw ModelError("measure_oscillation_period: fewer than 3 mean crossings");

    const double m = detail::mean(signal);
    double ss = 0.0;
    for (double s : signal) ss += (s - m) * (s - m);
    const double rms = std::sqrt(ss / static_cast<double>(signal.size()));
    const double h = 0.1 * rms;

    std::vector<double> crossings;
    int state = 0;            // −1 below band, +1 above band
    double last_cross = -1;   // most recent raw crossing of the mean
    for (std::size_t k = 1; k < signal.size(); ++k) {
        const double a = signal[k - 1] - m, b = signal[k] - m;
        if ((a < 0.0) != (b < 0.0) && b != a)
            last_cross = (static_cast<double>(k - 1) + a / (a - b)) * dt;
        if (b > h && state != 1) {
            if (state == -1 && last_cross >= 0.0) crossings.push_back(last_cross);
            state = 1;
        } else if (b < -h && state != -1) {
            if (state == 1 && last_cross >= 0.0) crossings.push_back(last_cross);
            state = -1;
        }
    }
    if (crossings.size() < 3) throw ModelError("measure_oscillation_period: fewer than 3 mean crossings");
    return 2.0 * (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
}

// ---------------------------------------------------------------------------
// Probing a plant

/// One recorded tuning experiment, kept for the probe CSV dump.
struct ProbeRecord {
    std::string label;
    PidGains gains;
    double setpoint = 0.0;
    TimeSeries output;
};

using ProbeLog = std::vector<ProbeRecord>;

struct ProbeResult {
    TimeSeries error;
    TimeSeries output;
};

/// Closed-loop set-point step from rest. Stops early if the error runs
/// away past `blowup` × |setpoint|.
template <SisoPlant P>
ProbeResult run_closed_loop_probe(P& plant, const PidGains& gains, double setpoint, double duration,
                                  OutputLimits limits = {-1e9, 1e9}, double blowup = 1e6)
{
    plant.reset();
    PidController pid(gains, limits, plant.dt());
    const auto steps = static_cast<std::size_t>(std::llround(duration / plant.dt()));
    ProbeResult r{{plant.dt(), {}}, {plant.dt(), {}}};
    r.error.values.reserve(steps);
    r.output.values.reserve(steps);
    double y = plant.output();
    for (std::size_t k = 0; k < steps; ++k) {
        const double e = setpoint - y;
        r.error.values.push_back(e);
        r.output.values.push_back(y);
        if (!(std::abs(e) <= blowup * std::max(std::abs(setpoint), 1e-12))) break;
        y = plant.step(pid.step(e));
    }
    return r;
}

/// Open-loop step of size `input_step` from rest.
template <SisoPlant P>
TimeSeries run_open_loop_step(P& plant, double input_step, double duration)
{
    plant.reset();
    const auto steps = static_cast<std::size_t>(std::llround(duration / plant.dt()));
    TimeSeries out{plant.dt(), {}};
    out.values.reserve(steps);
    out.values.push_back(plant.output());
    for (std::size_t k = 1; k < steps; ++k) out.values.push_back(plant.step(input_step));
    return out;
}

struct UltimateGainOptions {
    double kp_min = 0.1;
    double kp_max = 100.0;
    double dwell = 10.0;      ///< seconds per probe
    double setpoint = 1.0;
    double ramp_factor = 1.5;
    double rel_tol = 1e-3;    ///< bisection stops at this relative bracket width
    EnvelopeThresholds thresholds;
    ProbeLog* log = nullptr;
};

/// Raises a P-only gain until the error oscillates at constant amplitude.
/// A geometric ramp brackets the gain where the envelope stops decaying,
/// then bisection drives the cycle ratio to 1. The returned period is
/// measured on the second half of the final probe.
template <SisoPlant P>
UltimateGainResult find_ultimate_gain(P& plant, const UltimateGainOptions& opt = {})
{
    detail::require(std::isfinite(opt.kp_min) && opt.kp_min > 0.0 && opt.kp_max > opt.kp_min,
                    "find_ultimate_gain: require 0 < kp_min < kp_max");
    detail::require(std::isfinite(opt.dwell) && opt.dwell > 0.0, "find_ultimate_gain: dwell must be > 0");
    detail::require(opt.ramp_factor > 1.0, "find_ultimate_gain: ramp_factor must be > 1");

    auto probe = [&](double kp) {
        ProbeResult r = run_closed_loop_probe(plant, PidGains{kp, 0.0, 0.0}, opt.setpoint, opt.dwell);
        if (opt.log) opt.log->push_back({"zn kp=" + std::to_string(kp), {kp, 0, 0}, opt.setpoint, r.output});
        return r;
    };
    auto analyse = [&](const ProbeResult& r) { return classify_envelope(r.error.values, opt.thresholds); };

    double lo = opt.kp_min;
    if (analyse(probe(lo)).trend != EnvelopeTrend::decaying)
        throw ModelError("find_ultimate_gain: closed loop already oscillates at kp_min");

    double hi = lo;
    EnvelopeAnalysis at_hi;
    for (;;) {
        hi = std::min(hi * opt.ramp_factor, opt.kp_max);
        at_hi = analyse(probe(hi));
        if (at_hi.trend != EnvelopeTrend::decaying) break;
        if (hi >= opt.kp_max)
            throw ModelError("find_ultimate_gain: no sustained oscillation within the kp range");
        lo = hi;
    }

    while ((hi - lo) / lo > opt.rel_tol) {
        const double mid = 0.5 * (lo + hi);
        if (analyse(probe(mid)).cycle_ratio < 1.0)
            lo = mid;
        else
            hi = mid;
    }

    const double ku = 0.5 * (lo + hi);
    const ProbeResult final_probe = probe(ku);
    const EnvelopeAnalysis a = analyse(final_probe);
    if (a.trend != EnvelopeTrend::sustained)
        throw ModelError("find_ultimate_gain: could not settle on a constant-amplitude oscillation");
    const auto& e = final_probe.error.values;
    const std::span<const double> window(e.data() + e.size() / 2, e.size() - e.size() / 2);
    return {ku, measure_oscillation_period(window, plant.dt())};
}

// ---------------------------------------------------------------------------
// Custom procedure

struct StepMetrics {
    double overshoot = 0.0;      ///< fraction of the set-point
    double settling_time = 0.0;  ///< seconds to stay inside the 2% band
    double steady_error = 0.0;   ///< fraction of the set-point
    bool oscillating = false;
};

inline StepMetrics step_metrics(const ProbeResult& r, double setpoint, EnvelopeThresholds th = {})
{
    const auto& y = r.output.values;
    StepMetrics m;
    const double ref = std::abs(setpoint);
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : y) peak = std::max(peak, v * (setpoint >= 0 ? 1.0 : -1.0));
    m.overshoot = std::max(0.0, (peak - ref) / ref);

    std::size_t last_out = 0;
    bool ever_out = false;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (!(std::abs(y[k] - setpoint) <= 0.02 * ref)) {
            last_out = k;
            ever_out = true;
        }
    }
    m.settling_time = !ever_out ? 0.0
                      : last_out + 1 >= y.size() ? std::numeric_limits<double>::infinity()
                                                 : static_cast<double>(last_out + 1) * r.output.dt;

    const std::span<const double> ys(y);
    const std::size_t tail = std::max<std::size_t>(y.size() / 10, 1);
    m.steady_error = std::abs(detail::mean(ys.subspan(y.size() - tail)) - setpoint) / ref;

    try {
        const auto env = classify_envelope(r.error.values, th);
        m.oscillating = env.trend != EnvelopeTrend::decaying;
    } catch (const ModelError&) {
        m.oscillating = false;
    }
    return m;
}

struct CustomTuneOptions {
    int max_iters = 200;
    double overshoot_target = 0.10;
    double settle_multiple = 5.0;   ///< settle within τd + this many τm
    double steady_error_tol = 0.01;
    double open_loop_time = 20.0;   ///< seconds of open-loop step test
    double input_step = 1.0;
    double setpoint_min = 0.5;      ///< each iteration draws a random set-point
    double setpoint_max = 1.5;
    std::uint64_t seed = 7;
    OutputLimits limits{-1e9, 1e9};
    ProbeLog* log = nullptr;
};

struct CustomTuneStep {
    int iteration = 0;
    PidGains gains;
    double setpoint = 0.0;
    StepMetrics metrics;
    std::string action;
};

struct CustomTuneResult {
    TuningOutput output;
    FopdtModel characterization;
    std::vector<CustomTuneStep> history;
};

/// Open-loop characterization followed by rule-based gain adjustment,
/// starting from kp = ki = 0.5, kd = 0. Per iteration, first match wins:
///   oscillation                       → scale all gains × 0.7
///   overshoot ≥ target, seen before   → introduce kd = kp·τm/8 (once)
///   overshoot ≥ target                → scale all gains × 0.7
///   steady-state error > tolerance    → ki × 1.3
///   settling slower than target       → scale all gains × 1.5
/// and the loop ends when every target is met. Scaling kp, ki and kd
/// together keeps Ti and Td fixed; cutting kp alone leaves the integral
/// relatively stronger and the overshoot only gets worse.
template <SisoPlant P>
CustomTuneResult custom_tune(P& plant, const CustomTuneOptions& opt = {})
{
    detail::require(opt.max_iters > 0, "custom_tune: max_iters must be > 0");
    detail::require(opt.setpoint_min > 0.0 && opt.setpoint_max >= opt.setpoint_min,
                    "custom_tune: set-point range must be positive");

    CustomTuneResult result;
    const TimeSeries open = run_open_loop_step(plant, opt.input_step, opt.open_loop_time);
    if (opt.log) opt.log->push_back({"open-loop step", {}, opt.input_step, open});
    try {
        result.characterization = fit_fopdt(open, opt.input_step);
    } catch (const ModelError& e) {
        throw ModelError(std::string("custom_tune: plant is not self-regulating (") + e.what() + ")");
    }
    const FopdtModel& ch = result.characterization;
    if (!(ch.gain > 0.0)) throw ModelError("custom_tune: plant gain must be positive for direct-acting control");

    const double settle_target = ch.dead_time + opt.settle_multiple * ch.time_constant;
    const double window = std::max(4.0 * settle_target, 0.1);

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> pick(opt.setpoint_min, opt.setpoint_max);

    PidGains g{0.5, 0.5, 0.0};
    int overshoot_hits = 0;
    for (int it = 1; it <= opt.max_iters; ++it) {
        const double sp = pick(rng);
        const ProbeResult r = run_closed_loop_probe(plant, g, sp, window, opt.limits);
        if (opt.log) opt.log->push_back({"custom iter " + std::to_string(it), g, sp, r.output});
        const StepMetrics m = step_metrics(r, sp);

        CustomTuneStep st{it, g, sp, m, {}};
        if (!m.oscillating && m.overshoot < opt.overshoot_target && m.settling_time <= settle_target &&
            m.steady_error <= opt.steady_error_tol) {
            st.action = "converged";
            result.history.push_back(st);
            result.output.type = g.kd > 0.0 ? ControllerType::PID : ControllerType::PI;
            result.output.kp = g.kp;
            result.output.ti = g.kp / g.ki;
            if (g.kd > 0.0) result.output.td = g.kd / g.kp;
            return result;
        }

        auto scale = [&g](double f) {
            g.kp *= f;
            g.ki *= f;
            g.kd *= f;
        };
        if (m.oscillating) {
            scale(0.7);
            st.action = "oscillation: gains x0.7";
        } else if (m.overshoot >= opt.overshoot_target) {
            if (++overshoot_hits >= 2 && g.kd == 0.0) {
                g.kd = g.kp * ch.time_constant / 8.0;
                st.action = "overshoot persists: kd = kp*tm/8";
            } else {
                scale(0.7);
                st.action = "overshoot: gains x0.7";
            }
        } else if (m.steady_error > opt.steady_error_tol) {
            g.ki *= 1.3;
            st.action = "steady-state error: ki x1.3";
        } else {
            scale(1.5);
            st.action = "sluggish: gains x1.5";
        }
        result.history.push_back(st);
    }
    throw ModelError("custom_tune: iteration budget exhausted before meeting the targets");
}

}  // namespace pstab
