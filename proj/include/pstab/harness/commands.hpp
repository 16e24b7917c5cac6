#pragma once

// Library side of the CLI subcommands: simulation summaries, the per-leg
// tuning driver and the report writers. The executable only parses flags
// and picks output files.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "../errors.hpp"
#include "../kinematics.hpp"
#include "../plant.hpp"
#include "../tuning.hpp"
#include "config.hpp"

namespace pstab::harness {

// ---------------------------------------------------------------------------
// simulate

struct SimulationSummary {
    double band = 0.01;          ///< rad
    double settling_time = 0.0;  ///< s; inf if the tilt ends outside the band
    double max_pitch = 0.0;      ///< rad, over the whole run
    double max_roll = 0.0;
    double steady_pitch = 0.0;   ///< rad, max |.| over the final 10% of the run
    double steady_roll = 0.0;
};

inline SimulationSummary summarize(const SimulationTrace& trace, double band = 0.01)
{
    pstab::detail::require(!trace.rows.empty(), "summary: empty trace");
    SimulationSummary s;
    s.band = band;
    const std::size_t n = trace.rows.size();
    const std::size_t tail_start = n - std::max<std::size_t>(n / 10, 1);
    std::optional<std::size_t> last_out;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& r = trace.rows[k];
        const double p = std::abs(r.plate_pitch), q = std::abs(r.plate_roll);
        s.max_pitch = std::max(s.max_pitch, p);
        s.max_roll = std::max(s.max_roll, q);
        if (k >= tail_start) {
            s.steady_pitch = std::max(s.steady_pitch, p);
            s.steady_roll = std::max(s.steady_roll, q);
        }
        if (!(std::max(p, q) <= band)) last_out = k;
    }
    if (!last_out)
        s.settling_time = 0.0;
    else if (*last_out + 1 >= n)
        s.settling_time = std::numeric_limits<double>::infinity();
    else
        s.settling_time = trace.rows[*last_out + 1].t;
    return s;
}

inline void write_summary_csv(std::ostream& os, const SimulationSummary& s)
{
    os << "settling_time,max_pitch,max_roll,steady_pitch,steady_roll,band\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.settling_time, s.max_pitch, s.max_roll,
                  s.steady_pitch, s.steady_roll, s.band);
    os << buf;
}

inline void write_summary_text(std::ostream& os, const SimulationSummary& s)
{
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "settling time (|tilt| <= %g rad): %.6g s\n"
                  "max deviation: pitch %.6g rad, roll %.6g rad\n"
                  "steady-state error (final 10%%): pitch %.6g rad, roll %.6g rad\n",
                  s.band, s.settling_time, s.max_pitch, s.max_roll, s.steady_pitch, s.steady_roll);
    os << buf;
}

// ---------------------------------------------------------------------------
// tune

using LegPlant = std::variant<ServoLegProcess, FopdtProcess, IntegratingProcess>;

/// The single-leg channel a tuner sees for `leg` under the configured
/// plant kind: controller output in degrees to leg height change in mm.
inline LegPlant make_leg_plant(const SimulationConfig& cfg, std::size_t leg)
{
    switch (cfg.plant) {
    case PlantKind::mechanistic:
        return ServoLegProcess(cfg.servo, cfg.leg(), cfg.geometry.servo_home, cfg.dt);
    case PlantKind::fopdt:
        return FopdtProcess(cfg.leg_models[leg], cfg.dt);
    case PlantKind::integrating:
        return IntegratingProcess(cfg.leg_models[leg].gain, cfg.leg_models[leg].dead_time, cfg.dt);
    }
    throw ValidationError("unknown plant kind");
}

struct Check {
    std::string name;
    bool pass = false;
};

struct LegTuning {
    std::size_t leg = 0;  ///< 0-based
    TuneMethod method = TuneMethod::zn;
    std::optional<UltimateGainResult> ultimate;
    bool ultimate_measured = false;  ///< false when taken from the config
    std::optional<FopdtModel> model;
    bool model_identified = false;   ///< false when taken from the config
    TuningOutput gains;
    int iterations = 0;
    std::vector<Check> checks;
    std::vector<std::string> notes;
    ProbeLog probes;
};

namespace detail {

template <class P>
bool closes_stably(P& plant, const PidGains& g, double duration)
{
    const ProbeResult r = run_closed_loop_probe(plant, g, 1.0, duration);
    for (double e : r.error.values)
        if (!std::isfinite(e)) return false;
    if (r.error.values.size() < static_cast<std::size_t>(std::llround(duration / plant.dt()))) return false;
    try {
        return classify_envelope(r.error.values).trend == EnvelopeTrend::decaying;
    } catch (const ModelError&) {
        return false;
    }
}

inline std::string percent_note(const char* name, double ours, double ref)
{
    char buf[160];
    if (ref == 0.0) {
        std::snprintf(buf, sizeof buf, "%s: computed %.4g, reference absent", name, ours);
    } else {
        std::snprintf(buf, sizeof buf, "%s: computed %.4g vs reference %.4g (%+.1f%%)", name, ours, ref,
                      100.0 * (ours - ref) / ref);
    }
    return buf;
}

inline void compare_reference(LegTuning& out, const ReferenceGains& ref)
{
    out.notes.push_back(percent_note("kp", out.gains.kp, ref.kp));
    if (out.gains.ti || ref.ti != 0.0) out.notes.push_back(percent_note("ti", out.gains.ti.value_or(0.0), ref.ti));
    if (out.gains.td || ref.td != 0.0) out.notes.push_back(percent_note("td", out.gains.td.value_or(0.0), ref.td));
}

template <class P>
void tune_leg(P& plant, const AppConfig& cfg, LegTuning& out)
{
    const TuneSettings& t = cfg.tune;
    const std::string leg_name = "leg " + std::to_string(out.leg + 1);

    switch (t.method) {
    case TuneMethod::zn: {
        if (t.ultimate[out.leg]) {
            out.ultimate = *t.ultimate[out.leg];
        } else {
            UltimateGainOptions o;
            o.kp_min = t.kp_min;
            o.kp_max = t.kp_max;
            o.dwell = t.dwell;
            o.ramp_factor = t.ramp_factor;
            o.log = &out.probes;
            out.ultimate = find_ultimate_gain(plant, o);
            out.ultimate_measured = true;
            out.checks.push_back({"sustained oscillation at Ku", true});
        }
        out.gains = zn_gains(out.ultimate->ku, out.ultimate->tu, t.controller);
        out.checks.push_back({"closed loop with tuned gains decays", closes_stably(plant, out.gains.gains(), t.dwell)});
        break;
    }
    case TuneMethod::cc: {
        if (cfg.sim.plant == PlantKind::fopdt) {
            out.model = cfg.sim.leg_models[out.leg];
        } else {
            const TimeSeries open = run_open_loop_step(plant, t.input_step, t.open_loop_time);
            out.probes.push_back({"open-loop step", {}, t.input_step, open});
            try {
                out.model = fit_fopdt(open, t.input_step);
            } catch (const ModelError& e) {
                throw ModelError(leg_name + ": cannot identify a first-order model: " + e.what());
            }
            out.model_identified = true;
        }
        out.checks.push_back({"dead time > 0", out.model->dead_time > 0.0});
        out.checks.push_back({"dead time < 2 x time constant", out.model->dead_time_rule_ok()});
        try {
            out.gains = cohen_coon_gains(*out.model, t.controller);
        } catch (const ValidationError& e) {
            throw ModelError(leg_name + ": Cohen-Coon not applicable: " + e.what());
        }
        out.checks.push_back({"closed loop with tuned gains decays", closes_stably(plant, out.gains.gains(), t.dwell)});
        break;
    }
    case TuneMethod::custom: {
        CustomTuneOptions o;
        o.max_iters = t.max_iters;
        o.overshoot_target = t.overshoot_target;
        o.settle_multiple = t.settle_multiple;
        o.steady_error_tol = t.steady_error_tol;
        o.open_loop_time = t.open_loop_time;
        o.input_step = t.input_step;
        o.seed = cfg.sim.seed + out.leg;
        o.log = &out.probes;
        CustomTuneResult r;
        try {
            r = custom_tune(plant, o);
        } catch (const ModelError& e) {
            throw ModelError(leg_name + ": " + e.what());
        }
        out.model = r.characterization;
        out.model_identified = true;
        out.gains = r.output;
        out.iterations = static_cast<int>(r.history.size());
        const StepMetrics& m = r.history.back().metrics;
        out.checks.push_back({"overshoot below target", m.overshoot < t.overshoot_target});
        const double settle_target = r.characterization.dead_time + t.settle_multiple * r.characterization.time_constant;
        out.checks.push_back({"settles within target", m.settling_time <= settle_target});
        out.checks.push_back({"steady-state error within tolerance", m.steady_error <= t.steady_error_tol});
        break;
    }
    }
    if (t.reference[out.leg]) compare_reference(out, *t.reference[out.leg]);
}

}  // namespace detail

/// Tunes each leg independently on its own plant instance.
inline std::vector<LegTuning> tune_legs(const AppConfig& cfg)
{
    cfg.sim.validate();
    std::vector<LegTuning> out;
    for (std::size_t j = 0; j < 3; ++j) {
        LegTuning lt;
        lt.leg = j;
        lt.method = cfg.tune.method;
        LegPlant plant = make_leg_plant(cfg.sim, j);
        std::visit([&](auto& p) { detail::tune_leg(p, cfg, lt); }, plant);
        out.push_back(std::move(lt));
    }
    return out;
}

inline void write_tuning_report(std::ostream& os, const AppConfig& cfg, const std::vector<LegTuning>& legs)
{
    char buf[256];
    os << "method: " << to_string(cfg.tune.method) << "  controller: " << to_string(cfg.tune.controller)
       << "  plant: " << to_string(cfg.sim.plant) << '\n';
    for (const auto& lt : legs) {
        os << "\nleg " << lt.leg + 1 << '\n';
        if (lt.ultimate) {
            std::snprintf(buf, sizeof buf, "  Ku = %.6g  tu = %.6g s  (%s)\n", lt.ultimate->ku, lt.ultimate->tu,
                          lt.ultimate_measured ? "measured" : "from config");
            os << buf;
        }
        if (lt.model) {
            std::snprintf(buf, sizeof buf, "  K = %.6g  td = %.6g s  tm = %.6g s  (%s)\n", lt.model->gain,
                          lt.model->dead_time, lt.model->time_constant,
                          lt.model_identified ? "identified" : "from config");
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "  %s gains: kp = %.6g", std::string(to_string(lt.gains.type)).c_str(),
                      lt.gains.kp);
        os << buf;
        if (lt.gains.ti) {
            std::snprintf(buf, sizeof buf, "  ti = %.6g s", *lt.gains.ti);
            os << buf;
        }
        if (lt.gains.td) {
            std::snprintf(buf, sizeof buf, "  td = %.6g s", *lt.gains.td);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "  (ki = %.6g, kd = %.6g)\n", lt.gains.ki(), lt.gains.kd());
        os << buf;
        if (lt.iterations > 0) os << "  iterations: " << lt.iterations << '\n';
        for (const auto& c : lt.checks) os << "  check " << c.name << ": " << (c.pass ? "pass" : "FAIL") << '\n';
        for (const auto& n : lt.notes) os << "  reference " << n << '\n';
    }
}

/// Gains as a ready-to-paste [gains] section.
inline void write_gains_ini(std::ostream& os, const std::vector<LegTuning>& legs)
{
    os << "[gains]\n";
    for (const auto& lt : legs) {
        os << "leg" << lt.leg + 1 << " = " << detail::format(lt.gains.kp) << ", " << detail::format(lt.gains.ki())
           << ", " << detail::format(lt.gains.kd()) << '\n';
    }
}

/// Long format, one row per probe sample.
inline void write_probe_csv(std::ostream& os, const ProbeLog& probes)
{
    os << "probe,label,kp,ki,kd,setpoint,t,y\n";
    char buf[200];
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const auto& p = probes[i];
        for (std::size_t k = 0; k < p.output.values.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%zu,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", i, p.label.c_str(),
                          p.gains.kp, p.gains.ki, p.gains.kd, p.setpoint,
                          static_cast<double>(k) * p.output.dt, p.output.values[k]);
            os << buf;
        }
    }
}

// ---------------------------------------------------------------------------
// dof

struct DofBreakdown {
    int links = 0;
    std::vector<JointGroup> joints;
    int total_joints = 0;
    int freedoms = 0;  ///< Σ Fi·Ji
    int dof = 0;
};

inline DofBreakdown dof_breakdown(int links, std::vector<JointGroup> joints)
{
    DofBreakdown b;
    b.links = links;
    b.dof = grubler_dof(links, joints);
    for (const auto& g : joints) {
        b.total_joints += g.count;
        b.freedoms += g.dof_per_joint * g.count;
    }
    b.joints = std::move(joints);
    return b;
}

inline void write_dof_report(std::ostream& os, const DofBreakdown& b)
{
    os << "links N = " << b.links << ", joints J = " << b.total_joints << '\n';
    for (const auto& g : b.joints) os << "  " << g.count << " joint(s) x " << g.dof_per_joint << " freedom(s)\n";
    os << "sum Fi*Ji = " << b.freedoms << '\n';
    os << "F = 6*(" << b.links << " - 1 - " << b.total_joints << ") + " << b.freedoms << " = " << b.dof << '\n';
}

}  // namespace pstab::harness
