#pragma once

// Frames, homogeneous transforms and forward kinematics of the 3-leg
// parallel platform. Lengths are millimetres, angles radians.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>

#include "errors.hpp"

namespace pstab {

/// Z-Y-X orientation sample: yaw about Z, pitch about Y, roll about X.
struct EulerAngles {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;

    friend bool operator==(const EulerAngles&, const EulerAngles&) = default;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(Vec3 a, Vec3 b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline bool is_finite(Vec3 v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

inline bool is_finite(const EulerAngles& a)
{
    return std::isfinite(a.yaw) && std::isfinite(a.pitch) && std::isfinite(a.roll);
}

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// 4x4 pose matrix. Bottom row is always (0, 0, 0, 1).
class HomogeneousTransform {
public:
    using Matrix = std::array<std::array<double, 4>, 4>;

    HomogeneousTransform() : m_{{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}} {}

    static HomogeneousTransform identity() { return {}; }

    double operator()(std::size_t r, std::size_t c) const { return m_[r][c]; }

    const Matrix& matrix() const { return m_; }

    Vec3 translation() const { return {m_[0][3], m_[1][3], m_[2][3]}; }

    /// Maps a point through the full transform.
    Vec3 apply(Vec3 p) const
    {
        return {m_[0][0] * p.x + m_[0][1] * p.y + m_[0][2] * p.z + m_[0][3],
                m_[1][0] * p.x + m_[1][1] * p.y + m_[1][2] * p.z + m_[1][3],
                m_[2][0] * p.x + m_[2][1] * p.y + m_[2][2] * p.z + m_[2][3]};
    }

    /// max |(RᵀR − I)_ij| over the rotation block.
    double orthonormality_error() const
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < 3; ++k) s += m_[k][i] * m_[k][j];
                worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
            }
        }
        return worst;
    }

    double rotation_determinant() const
    {
        const auto& a = m_;
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    }

    friend HomogeneousTransform compose(const HomogeneousTransform& outer,
                                        const HomogeneousTransform& inner);
    friend HomogeneousTransform rotation_transform(const EulerAngles& angles, double base_height);
    friend HomogeneousTransform translation_transform(Vec3 p);

private:
    Matrix m_;
};

/// Standard 4x4 product `outer * inner`: the result maps a point first
/// through `inner`, then through `outer`.
inline HomogeneousTransform compose(const HomogeneousTransform& outer,
                                    const HomogeneousTransform& inner)
{
    HomogeneousTransform out;
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k) s += outer.m_[r][k] * inner.m_[k][c];
            out.m_[r][c] = s;
        }
    }
    out.m_[3] = {0.0, 0.0, 0.0, 1.0};
    return out;
}

/// Top-plate pose in the base frame: Z-Y-X rotation of the plate angles
/// with the fixed plate height in the translation column.
inline HomogeneousTransform rotation_transform(const EulerAngles& angles, double base_height)
{
    const double cz = std::cos(angles.yaw), sz = std::sin(angles.yaw);
    const double cy = std::cos(angles.pitch), sy = std::sin(angles.pitch);
    const double cx = std::cos(angles.roll), sx = std::sin(angles.roll);

    HomogeneousTransform t;
    t.m_[0] = {cz * cy, -sz * cx + cz * sy * sx, sz * sx + cz * sy * cx, 0.0};
    t.m_[1] = {sz * cy, cz * cx + sz * sy * sx, -cz * sx + sz * sy * cx, 0.0};
    t.m_[2] = {-sy, cy * sx, cy * cx, base_height};
    return t;
}

/// Pure translation (a ball joint's position in the top-plate frame).
inline HomogeneousTransform translation_transform(Vec3 p)
{
    HomogeneousTransform t;
    t.m_[0][3] = p.x;
    t.m_[1][3] = p.y;
    t.m_[2][3] = p.z;
    return t;
}

/// Recovers Z-Y-X angles from the rotation block of `t`.
inline EulerAngles euler_from_transform(const HomogeneousTransform& t)
{
    const double s = std::clamp(-t(2, 0), -1.0, 1.0);
    return {std::atan2(t(1, 0), t(0, 0)), std::asin(s), std::atan2(t(2, 1), t(2, 2))};
}

/// Mobility of a spatial mechanism (Grübler / Kutzbach):
/// F = 6 (N − 1 − J) + Σ Fi·Ji.
struct JointGroup {
    int dof_per_joint = 0;
    int count = 0;
};

inline int grubler_dof(int num_links, std::span<const JointGroup> joints)
{
    detail::require(num_links >= 2, "grubler_dof: num_links must be >= 2");
    int total_joints = 0;
    int freedoms = 0;
    for (const auto& g : joints) {
        detail::require(g.dof_per_joint >= 0 && g.count >= 0,
                        "grubler_dof: joint counts and freedoms must be non-negative");
        total_joints += g.count;
        freedoms += g.dof_per_joint * g.count;
    }
    return 6 * (num_links - 1 - total_joints) + freedoms;
}

/// Ball-joint placement and leg dimensions of the platform.
struct PlatformGeometry {
    std::array<Vec3, 3> joint_top{};  ///< ball joints in the top-plate frame
    double base_height = 88.89;       ///< plate-to-base distance, held fixed
    double crank_length = 15.0;
    double link_length = 79.0;
    double servo_home = 45.0;         ///< degrees

    friend bool operator==(const PlatformGeometry&, const PlatformGeometry&) = default;

    /// Joints on a circle of `radius` at bearings 90°, 210°, 330°.
    static std::array<Vec3, 3> circular_joints(double radius)
    {
        std::array<Vec3, 3> out{};
        const double bearings[3] = {90.0, 210.0, 330.0};
        for (std::size_t i = 0; i < 3; ++i) {
            const double b = deg_to_rad(bearings[i]);
            out[i] = {radius * std::cos(b), radius * std::sin(b), 0.0};
        }
        return out;
    }

    static PlatformGeometry defaults()
    {
        PlatformGeometry g;
        g.joint_top = circular_joints(40.0);
        return g;
    }

    void validate() const
    {
        detail::require(std::isfinite(crank_length) && crank_length > 0.0,
                        "geometry.crank_length must be > 0");
        detail::require(std::isfinite(link_length) && link_length > crank_length,
                        "geometry.link_length must exceed crank_length");
        detail::require(std::isfinite(base_height), "geometry.base_height must be finite");
        detail::require(std::isfinite(servo_home) && servo_home >= 0.0 && servo_home <= 180.0,
                        "geometry.servo_home must lie in [0, 180]");
        for (const auto& j : joint_top) detail::require(is_finite(j), "geometry joints must be finite");
        const Vec3 n = cross(joint_top[1] - joint_top[0], joint_top[2] - joint_top[0]);
        detail::require(std::sqrt(dot(n, n)) > 1e-9, "geometry joints must not be collinear");
    }
};

/// Base-frame ball-joint positions (the robot state).
struct RobotState {
    std::array<Vec3, 3> joints{};
    double timestamp = 0.0;

    std::array<double, 3> heights() const { return {joints[0].z, joints[1].z, joints[2].z}; }
};

/// Expanded position equations of the plate-to-base transform applied to
/// each ball joint. Term layout mirrors the rotation entries one to one.
inline RobotState ball_joint_positions(const EulerAngles& angles, const PlatformGeometry& geometry)
{
    const double cz = std::cos(angles.yaw), sz = std::sin(angles.yaw);
    const double cy = std::cos(angles.pitch), sy = std::sin(angles.pitch);
    const double cx = std::cos(angles.roll), sx = std::sin(angles.roll);

    RobotState s;
    for (std::size_t j = 0; j < 3; ++j) {
        const auto [x, y, z] = geometry.joint_top[j];
        s.joints[j].x = (cz * cy) * x + (-sz * cx + cz * sy * sx) * y + (sz * sx + cz * sy * cx) * z;
        s.joints[j].y = (sz * cy) * x + (cz * cx + sz * sy * sx) * y + (-cz * sx + sz * sy * cx) * z;
        s.joints[j].z = (-sy) * x + (cy * sx) * y + (cy * cx) * z + geometry.base_height;
    }
    return s;
}

}  // namespace pstab
