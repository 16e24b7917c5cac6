#pragma once

// Flight-log ingestion and attitude-deviation statistics.
//
// Log schema: header `t,yaw,pitch,roll[,base_yaw,base_pitch,base_roll]`,
// angles in degrees, one sample per row.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <initializer_list>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "../errors.hpp"
#include "../kinematics.hpp"

namespace pstab::harness {

struct FlightLogSample {
    double t = 0.0;
    EulerAngles plate;                  ///< degrees
    std::optional<EulerAngles> base;    ///< degrees, secondary IMU

    friend bool operator==(const FlightLogSample&, const FlightLogSample&) = default;
};

struct FlightLog {
    std::vector<FlightLogSample> samples;
    bool has_base = false;
    std::size_t dropped = 0;  ///< rows removed while cleaning
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t next = line.find(sep, pos);
        out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

inline std::optional<double> parse_number(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace detail

/// Reads and cleans a log. Rows with a non-finite or unparseable value,
/// or with the wrong number of fields, are dropped; a row repeating the
/// previous timestamp is dropped as a duplicate write. Time running
/// backwards is an error.
inline FlightLog read_flight_log(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || detail::trim(line).empty())
        throw ValidationError("flight log is empty");

    const auto header = detail::split(line);
    static constexpr std::array<std::string_view, 7> names = {"t",        "yaw",        "pitch",   "roll",
                                                              "base_yaw", "base_pitch", "base_roll"};
    std::array<int, 7> col{};
    col.fill(-1);
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto it = std::find(names.begin(), names.end(), header[i]);
        if (it == names.end())
            throw ValidationError("flight log: unknown column '" + std::string(header[i]) + "'");
        auto& slot = col[static_cast<std::size_t>(it - names.begin())];
        if (slot >= 0) throw ValidationError("flight log: duplicate column '" + std::string(header[i]) + "'");
        slot = static_cast<int>(i);
    }
    for (std::size_t k = 0; k < 4; ++k)
        if (col[k] < 0) throw ValidationError("flight log: missing column '" + std::string(names[k]) + "'");
    const int base_cols = (col[4] >= 0) + (col[5] >= 0) + (col[6] >= 0);
    if (base_cols != 0 && base_cols != 3)
        throw ValidationError("flight log: base_yaw, base_pitch and base_roll must appear together");

    FlightLog log;
    log.has_base = base_cols == 3;
    const std::size_t width = header.size();
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split(line);
        std::array<double, 7> v{};
        bool ok = fields.size() == width;
        for (std::size_t k = 0; ok && k < 7; ++k) {
            if (col[k] < 0) continue;
            const auto x = detail::parse_number(fields[static_cast<std::size_t>(col[k])]);
            ok = x && std::isfinite(*x);
            if (ok) v[k] = *x;
        }
        if (!ok) {
            ++log.dropped;
            continue;
        }
        if (!log.samples.empty()) {
            const double prev = log.samples.back().t;
            if (v[0] == prev) {
                ++log.dropped;
                continue;
            }
            if (v[0] < prev) {
                std::ostringstream msg;
                msg << "flight log: time goes backwards at t=" << v[0] << " (previous " << prev << ")";
                throw ValidationError(msg.str());
            }
        }
        FlightLogSample s{v[0], {v[1], v[2], v[3]}, std::nullopt};
        if (log.has_base) s.base = EulerAngles{v[4], v[5], v[6]};
        log.samples.push_back(s);
    }
    if (log.samples.size() < 2) throw ValidationError("flight log: need at least 2 valid samples");
    return log;
}

/// Writes a log in the schema above at full precision, so reading the
/// output back reproduces the same samples.
inline void write_flight_log(std::ostream& os, const FlightLog& log)
{
    os << "t,yaw,pitch,roll";
    if (log.has_base) os << ",base_yaw,base_pitch,base_roll";
    os << '\n';
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (const auto& s : log.samples) {
        put(s.t);
        for (double v : {s.plate.yaw, s.plate.pitch, s.plate.roll}) {
            os << ',';
            put(v);
        }
        if (log.has_base && s.base) {
            for (double v : {s.base->yaw, s.base->pitch, s.base->roll}) {
                os << ',';
                put(v);
            }
        }
        os << '\n';
    }
}

struct AxisDeviation {
    double max_abs = 0.0;  ///< degrees
    double rms = 0.0;      ///< degrees
};

struct DeviationReport {
    AxisDeviation yaw, pitch, roll;
    std::optional<std::array<AxisDeviation, 3>> base;  ///< yaw, pitch, roll
    std::size_t samples = 0;
    std::size_t dropped = 0;
    double duration = 0.0;  ///< seconds, last minus first timestamp
};

/// Deviation from zero per axis. RMS is over samples, not time-weighted.
inline DeviationReport analyse_flight_log(const FlightLog& log)
{
    pstab::detail::require(log.samples.size() >= 2, "flight log: need at least 2 samples");
    const auto n = static_cast<double>(log.samples.size());
    auto axis = [&](auto get) {
        AxisDeviation a;
        double ss = 0.0;
        for (const auto& s : log.samples) {
            const double v = get(s);
            a.max_abs = std::max(a.max_abs, std::abs(v));
            ss += v * v;
        }
        a.rms = std::sqrt(ss / n);
        return a;
    };

    DeviationReport r;
    r.yaw = axis([](const FlightLogSample& s) { return s.plate.yaw; });
    r.pitch = axis([](const FlightLogSample& s) { return s.plate.pitch; });
    r.roll = axis([](const FlightLogSample& s) { return s.plate.roll; });
    if (log.has_base) {
        r.base = std::array<AxisDeviation, 3>{
            axis([](const FlightLogSample& s) { return s.base->yaw; }),
            axis([](const FlightLogSample& s) { return s.base->pitch; }),
            axis([](const FlightLogSample& s) { return s.base->roll; })};
    }
    r.samples = log.samples.size();
    r.dropped = log.dropped;
    r.duration = log.samples.back().t - log.samples.front().t;
    return r;
}

inline void write_deviation_report(std::ostream& os, const DeviationReport& r)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "samples %zu (dropped %zu), duration %.6g s\n", r.samples, r.dropped,
                  r.duration);
    os << buf;
    auto line = [&](const char* name, const AxisDeviation& a) {
        std::snprintf(buf, sizeof buf, "%-10s max %.6g deg  rms %.6g deg\n", name, a.max_abs, a.rms);
        os << buf;
    };
    line("yaw", r.yaw);
    line("pitch", r.pitch);
    line("roll", r.roll);
    if (r.base) {
        line("base_yaw", (*r.base)[0]);
        line("base_pitch", (*r.base)[1]);
        line("base_roll", (*r.base)[2]);
    }
}

}  // namespace pstab::harness
