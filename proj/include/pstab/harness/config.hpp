#pragma once

// INI run configuration. Every section and key is optional and falls back
// to the library default, but unknown sections or keys are rejected so a
// typo cannot silently change an experiment.
//
//   [geometry] joint1..joint3 = x, y, z   base_height  crank_length
//              link_length  servo_home
//   [servo]    rate_limit  lag_tau  range_min  range_max
//   [plant]    model = mechanistic | fopdt | integrating
//              leg1..leg3 = K, dead_time, time_constant
//   [gains]    leg1..leg3 = kp, ki, kd   output_min  output_max
//   [disturbance] kind = none | step | sine_sweep | recorded
//              yaw pitch roll (rad)  start_time  freq_start  freq_end
//              sweep_time  seed  random_phase  file (flight-log CSV)
//   [run]      duration  dt  seed
//   [noise]    sigma
//   [tune]     method = zn | cc | custom   controller = P | PI | PD | PID
//              kp_min kp_max dwell ramp_factor open_loop_time input_step
//              max_iters overshoot_target settle_multiple steady_error_tol
//              ultimate_leg1..3 = Ku, tu      reference_leg1..3 = kp, ti, td

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "../errors.hpp"
#include "../plant.hpp"
#include "../tuning.hpp"
#include "replay.hpp"

namespace pstab::harness {

enum class TuneMethod { zn, cc, custom };

inline std::string_view to_string(TuneMethod m)
{
    switch (m) {
    case TuneMethod::zn: return "zn";
    case TuneMethod::cc: return "cc";
    case TuneMethod::custom: return "custom";
    }
    return "?";
}

inline TuneMethod parse_tune_method(std::string_view s)
{
    if (s == "zn") return TuneMethod::zn;
    if (s == "cc") return TuneMethod::cc;
    if (s == "custom") return TuneMethod::custom;
    throw ValidationError("tune.method must be zn, cc or custom (got '" + std::string(s) + "')");
}

/// Gains to compare a tuning result against, ideal form; ti/td of 0 mean
/// the term is absent.
struct ReferenceGains {
    double kp = 0.0;
    double ti = 0.0;
    double td = 0.0;

    friend bool operator==(const ReferenceGains&, const ReferenceGains&) = default;
};

struct TuneSettings {
    TuneMethod method = TuneMethod::zn;
    ControllerType controller = ControllerType::PID;
    double kp_min = 0.1;
    double kp_max = 100.0;
    double dwell = 10.0;
    double ramp_factor = 1.5;
    double open_loop_time = 20.0;
    double input_step = 1.0;
    int max_iters = 200;
    double overshoot_target = 0.10;
    double settle_multiple = 5.0;
    double steady_error_tol = 0.01;
    /// Measured (Ku, τu) per leg; when present zn skips the search.
    std::array<std::optional<UltimateGainResult>, 3> ultimate{};
    std::array<std::optional<ReferenceGains>, 3> reference{};

    friend bool operator==(const TuneSettings&, const TuneSettings&) = default;
};

struct AppConfig {
    SimulationConfig sim;
    std::string disturbance_file;  ///< as written in the config
    TuneSettings tune;

    friend bool operator==(const AppConfig&, const AppConfig&) = default;
};

namespace detail {

using boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys = {
        {"geometry", {"joint1", "joint2", "joint3", "base_height", "crank_length", "link_length", "servo_home"}},
        {"servo", {"rate_limit", "lag_tau", "range_min", "range_max"}},
        {"plant", {"model", "leg1", "leg2", "leg3"}},
        {"gains", {"leg1", "leg2", "leg3", "output_min", "output_max"}},
        {"disturbance",
         {"kind", "yaw", "pitch", "roll", "start_time", "freq_start", "freq_end", "sweep_time", "seed",
          "random_phase", "file"}},
        {"run", {"duration", "dt", "seed"}},
        {"noise", {"sigma"}},
        {"tune",
         {"method", "controller", "kp_min", "kp_max", "dwell", "ramp_factor", "open_loop_time", "input_step",
          "max_iters", "overshoot_target", "settle_multiple", "steady_error_tol", "ultimate_leg1",
          "ultimate_leg2", "ultimate_leg3", "reference_leg1", "reference_leg2", "reference_leg3"}},
    };
    return keys;
}

inline std::string field(std::string_view section, std::string_view key)
{
    return std::string(section) + "." + std::string(key);
}

inline double to_double(std::string_view text, const std::string& name)
{
    text = harness::detail::trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
        throw ValidationError(name + ": expected a number, got '" + std::string(text) + "'");
    return v;
}

template <class Int>
Int to_integer(std::string_view text, const std::string& name)
{
    text = harness::detail::trim(text);
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
        throw ValidationError(name + ": expected an integer, got '" + std::string(text) + "'");
    return v;
}

template <std::size_t N>
std::array<double, N> to_tuple(std::string_view text, const std::string& name)
{
    const auto parts = harness::detail::split(text);
    if (parts.size() != N)
        throw ValidationError(name + ": expected " + std::to_string(N) + " comma-separated numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = to_double(parts[i], name);
    return out;
}

inline bool to_bool(std::string_view text, const std::string& name)
{
    text = harness::detail::trim(text);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ValidationError(name + ": expected true or false, got '" + std::string(text) + "'");
}

// Shortest text that parses back to the same double.
inline std::string format(double v)
{
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <std::size_t N>
std::string format(const std::array<double, N>& v)
{
    std::string out;
    for (std::size_t i = 0; i < N; ++i) {
        if (i) out += ", ";
        out += format(v[i]);
    }
    return out;
}

class SectionReader {
public:
    SectionReader(const ptree* node, std::string name) : node_(node), name_(std::move(name)) {}

    std::optional<std::string> raw(const std::string& key) const
    {
        if (!node_) return std::nullopt;
        const auto v = node_->get_optional<std::string>(ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return std::string(harness::detail::trim(*v));
    }

    void number(const std::string& key, double& out) const
    {
        if (auto v = raw(key)) out = to_double(*v, field(name_, key));
    }

    template <class Int>
    void integer(const std::string& key, Int& out) const
    {
        if (auto v = raw(key)) out = to_integer<Int>(*v, field(name_, key));
    }

    template <std::size_t N>
    std::optional<std::array<double, N>> tuple(const std::string& key) const
    {
        if (auto v = raw(key)) return to_tuple<N>(*v, field(name_, key));
        return std::nullopt;
    }

    void boolean(const std::string& key, bool& out) const
    {
        if (auto v = raw(key)) out = to_bool(*v, field(name_, key));
    }

private:
    const ptree* node_;
    std::string name_;
};

inline void check_keys(const ptree& root)
{
    const auto& known = known_keys();
    for (const auto& [section, node] : root) {
        const auto it = known.find(section);
        if (it == known.end()) {
            if (node.empty()) throw ValidationError("config: key '" + section + "' outside any section");
            throw ValidationError("config: unknown section [" + section + "]");
        }
        for (const auto& [key, value] : node) {
            if (!it->second.count(key)) throw ValidationError("config: unknown key '" + field(section, key) + "'");
        }
    }
}

inline DisturbanceProfile::Kind parse_kind(std::string_view s)
{
    using K = DisturbanceProfile::Kind;
    if (s == "none") return K::none;
    if (s == "step") return K::step;
    if (s == "sine_sweep") return K::sine_sweep;
    if (s == "recorded") return K::recorded;
    throw ValidationError("disturbance.kind must be none, step, sine_sweep or recorded (got '" +
                          std::string(s) + "')");
}

inline std::string_view kind_name(DisturbanceProfile::Kind k)
{
    using K = DisturbanceProfile::Kind;
    switch (k) {
    case K::none: return "none";
    case K::step: return "step";
    case K::sine_sweep: return "sine_sweep";
    case K::recorded: return "recorded";
    }
    return "none";
}

inline PlantKind parse_plant_kind(std::string_view s)
{
    if (s == "mechanistic") return PlantKind::mechanistic;
    if (s == "fopdt") return PlantKind::fopdt;
    if (s == "integrating") return PlantKind::integrating;
    throw ValidationError("plant.model must be mechanistic, fopdt or integrating (got '" + std::string(s) + "')");
}

}  // namespace detail

/// Recorded disturbance from a flight log: degrees in, radians out.
inline std::vector<DisturbanceProfile::Sample> disturbance_from_log(const FlightLog& log)
{
    std::vector<DisturbanceProfile::Sample> out;
    out.reserve(log.samples.size());
    for (const auto& s : log.samples)
        out.push_back({s.t, {deg_to_rad(s.plate.yaw), deg_to_rad(s.plate.pitch), deg_to_rad(s.plate.roll)}});
    return out;
}

/// Parses INI text. A relative disturbance file is resolved against
/// `base_dir`. The result is validated.
inline AppConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {})
{
    using detail::SectionReader;
    detail::ptree root;
    try {
        boost::property_tree::ini_parser::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ValidationError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    detail::check_keys(root);

    auto section = [&](const char* name) {
        const auto it = root.find(name);
        return SectionReader(it == root.not_found() ? nullptr : &it->second, name);
    };

    AppConfig cfg;
    SimulationConfig& sim = cfg.sim;

    const auto geo = section("geometry");
    for (std::size_t j = 0; j < 3; ++j) {
        if (auto v = geo.tuple<3>("joint" + std::to_string(j + 1))) sim.geometry.joint_top[j] = {(*v)[0], (*v)[1], (*v)[2]};
    }
    geo.number("base_height", sim.geometry.base_height);
    geo.number("crank_length", sim.geometry.crank_length);
    geo.number("link_length", sim.geometry.link_length);
    geo.number("servo_home", sim.geometry.servo_home);

    const auto servo = section("servo");
    servo.number("rate_limit", sim.servo.rate_limit);
    servo.number("lag_tau", sim.servo.lag_tau);
    servo.number("range_min", sim.servo.range_min);
    servo.number("range_max", sim.servo.range_max);

    const auto plant = section("plant");
    if (auto v = plant.raw("model")) sim.plant = detail::parse_plant_kind(*v);
    for (std::size_t j = 0; j < 3; ++j) {
        if (auto v = plant.tuple<3>("leg" + std::to_string(j + 1))) sim.leg_models[j] = {(*v)[0], (*v)[1], (*v)[2]};
    }

    const auto gains = section("gains");
    for (std::size_t j = 0; j < 3; ++j) {
        if (auto v = gains.tuple<3>("leg" + std::to_string(j + 1))) sim.gains[j] = {(*v)[0], (*v)[1], (*v)[2]};
    }
    gains.number("output_min", sim.output_limits.min);
    gains.number("output_max", sim.output_limits.max);

    auto& d = sim.disturbance;
    const auto dist = section("disturbance");
    if (auto v = dist.raw("kind")) d.kind = detail::parse_kind(*v);
    dist.number("yaw", d.amplitude.yaw);
    dist.number("pitch", d.amplitude.pitch);
    dist.number("roll", d.amplitude.roll);
    dist.number("start_time", d.start_time);
    dist.number("freq_start", d.freq_start);
    dist.number("freq_end", d.freq_end);
    dist.number("sweep_time", d.sweep_time);
    dist.integer("seed", d.seed);
    dist.boolean("random_phase", d.random_phase);
    if (auto v = dist.raw("file")) cfg.disturbance_file = *v;
    if (d.kind == DisturbanceProfile::Kind::recorded) {
        if (cfg.disturbance_file.empty())
            throw ValidationError("disturbance.file is required when disturbance.kind = recorded");
        std::filesystem::path p(cfg.disturbance_file);
        if (p.is_relative()) p = base_dir / p;
        std::ifstream f(p);
        if (!f) throw ValidationError("disturbance.file: cannot open '" + p.string() + "'");
        d.recorded = disturbance_from_log(read_flight_log(f));
    }

    const auto run = section("run");
    run.number("duration", sim.duration);
    run.number("dt", sim.dt);
    run.integer("seed", sim.seed);

    section("noise").number("sigma", sim.noise_sigma);

    auto& t = cfg.tune;
    const auto tune = section("tune");
    if (auto v = tune.raw("method")) t.method = parse_tune_method(*v);
    if (auto v = tune.raw("controller")) t.controller = parse_controller_type(*v);
    tune.number("kp_min", t.kp_min);
    tune.number("kp_max", t.kp_max);
    tune.number("dwell", t.dwell);
    tune.number("ramp_factor", t.ramp_factor);
    tune.number("open_loop_time", t.open_loop_time);
    tune.number("input_step", t.input_step);
    tune.integer("max_iters", t.max_iters);
    tune.number("overshoot_target", t.overshoot_target);
    tune.number("settle_multiple", t.settle_multiple);
    tune.number("steady_error_tol", t.steady_error_tol);
    for (std::size_t j = 0; j < 3; ++j) {
        const std::string n = std::to_string(j + 1);
        if (auto v = tune.tuple<2>("ultimate_leg" + n)) t.ultimate[j] = UltimateGainResult{(*v)[0], (*v)[1]};
        if (auto v = tune.tuple<3>("reference_leg" + n)) t.reference[j] = ReferenceGains{(*v)[0], (*v)[1], (*v)[2]};
    }

    sim.validate();
    using pstab::detail::require;
    require(t.kp_min > 0.0 && t.kp_max > t.kp_min, "tune.kp_min / tune.kp_max require 0 < kp_min < kp_max");
    require(t.dwell > 0.0, "tune.dwell must be > 0");
    require(t.ramp_factor > 1.0, "tune.ramp_factor must be > 1");
    require(t.open_loop_time > 0.0, "tune.open_loop_time must be > 0");
    require(t.input_step != 0.0 && std::isfinite(t.input_step), "tune.input_step must be non-zero");
    require(t.max_iters > 0, "tune.max_iters must be > 0");
    require(t.overshoot_target > 0.0, "tune.overshoot_target must be > 0");
    require(t.settle_multiple > 0.0, "tune.settle_multiple must be > 0");
    require(t.steady_error_tol > 0.0, "tune.steady_error_tol must be > 0");
    for (std::size_t j = 0; j < 3; ++j) {
        if (t.ultimate[j])
            require(t.ultimate[j]->ku > 0.0 && t.ultimate[j]->tu > 0.0,
                    "tune.ultimate_leg" + std::to_string(j + 1) + " requires Ku > 0 and tu > 0");
    }
    return cfg;
}

inline AppConfig load_config(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open config '" + path.string() + "'");
    return parse_config(f, path.parent_path());
}

/// Writes every key; parsing the output reproduces `cfg`.
inline std::string serialize_config(const AppConfig& cfg)
{
    using detail::format;
    const SimulationConfig& sim = cfg.sim;
    std::ostringstream os;
    auto kv = [&](std::string_view k, const std::string& v) { os << k << " = " << v << '\n'; };

    os << "[geometry]\n";
    for (std::size_t j = 0; j < 3; ++j) {
        const Vec3& p = sim.geometry.joint_top[j];
        kv("joint" + std::to_string(j + 1), format(std::array<double, 3>{p.x, p.y, p.z}));
    }
    kv("base_height", format(sim.geometry.base_height));
    kv("crank_length", format(sim.geometry.crank_length));
    kv("link_length", format(sim.geometry.link_length));
    kv("servo_home", format(sim.geometry.servo_home));

    os << "\n[servo]\n";
    kv("rate_limit", format(sim.servo.rate_limit));
    kv("lag_tau", format(sim.servo.lag_tau));
    kv("range_min", format(sim.servo.range_min));
    kv("range_max", format(sim.servo.range_max));

    os << "\n[plant]\n";
    kv("model", std::string(to_string(sim.plant)));
    for (std::size_t j = 0; j < 3; ++j) {
        const FopdtModel& m = sim.leg_models[j];
        kv("leg" + std::to_string(j + 1), format(std::array<double, 3>{m.gain, m.dead_time, m.time_constant}));
    }

    os << "\n[gains]\n";
    for (std::size_t j = 0; j < 3; ++j) {
        const PidGains& g = sim.gains[j];
        kv("leg" + std::to_string(j + 1), format(std::array<double, 3>{g.kp, g.ki, g.kd}));
    }
    kv("output_min", format(sim.output_limits.min));
    kv("output_max", format(sim.output_limits.max));

    const auto& d = sim.disturbance;
    os << "\n[disturbance]\n";
    kv("kind", std::string(detail::kind_name(d.kind)));
    kv("yaw", format(d.amplitude.yaw));
    kv("pitch", format(d.amplitude.pitch));
    kv("roll", format(d.amplitude.roll));
    kv("start_time", format(d.start_time));
    kv("freq_start", format(d.freq_start));
    kv("freq_end", format(d.freq_end));
    kv("sweep_time", format(d.sweep_time));
    kv("seed", std::to_string(d.seed));
    kv("random_phase", d.random_phase ? "true" : "false");
    if (!cfg.disturbance_file.empty()) kv("file", cfg.disturbance_file);

    os << "\n[run]\n";
    kv("duration", format(sim.duration));
    kv("dt", format(sim.dt));
    kv("seed", std::to_string(sim.seed));

    os << "\n[noise]\n";
    kv("sigma", format(sim.noise_sigma));

    const TuneSettings& t = cfg.tune;
    os << "\n[tune]\n";
    kv("method", std::string(to_string(t.method)));
    kv("controller", std::string(to_string(t.controller)));
    kv("kp_min", format(t.kp_min));
    kv("kp_max", format(t.kp_max));
    kv("dwell", format(t.dwell));
    kv("ramp_factor", format(t.ramp_factor));
    kv("open_loop_time", format(t.open_loop_time));
    kv("input_step", format(t.input_step));
    kv("max_iters", std::to_string(t.max_iters));
    kv("overshoot_target", format(t.overshoot_target));
    kv("settle_multiple", format(t.settle_multiple));
    kv("steady_error_tol", format(t.steady_error_tol));
    for (std::size_t j = 0; j < 3; ++j) {
        const std::string n = std::to_string(j + 1);
        if (t.ultimate[j]) kv("ultimate_leg" + n, format(std::array<double, 2>{t.ultimate[j]->ku, t.ultimate[j]->tu}));
        if (t.reference[j]) {
            const auto& r = *t.reference[j];
            kv("reference_leg" + n, format(std::array<double, 3>{r.kp, r.ti, r.td}));
        }
    }
    return os.str();
}

}  // namespace pstab::harness
