#pragma once

#include "orchard/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>

namespace orchard {

/// Default clamp for the approach angles. Wider poses are unreachable for the
/// gripper, and the clamp also keeps the azimuth mean away from the +-pi wrap.
inline constexpr double default_angle_clamp = std::numbers::pi / 3.0;

/// Azimuth/elevation of a point about a sphere center, work frame.
/// theta turns about +Z from the +X axis, phi elevates from the XY plane, so
/// phi is always in [-pi/2, pi/2]. Points closer than 1e-6 m to the center
/// have no direction and yield nullopt.
inline std::optional<std::pair<double, double>> point_angles(const Point3& p, const Point3& c) {
    const Point3 q = p - c;
    if (q.norm() < 1e-6) return std::nullopt;
    const double theta = std::atan2(q.y(), q.x());
    const double phi = std::atan2(q.z(), std::sqrt(q.x() * q.x() + q.y() * q.y()));
    return std::make_pair(theta, phi);
}

/// Yaw-then-pitch rotation, roll fixed at zero: Rz(theta) * Ry(phi) * Rx(0).
/// Entries are written out so two evaluations of the same angles are
/// bit-identical.
inline Mat3 rotation_matrix(double theta, double phi) {
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    Mat3 m;
    m << ct * cp, -st, ct * sp,
         st * cp,  ct, st * sp,
         -sp,     0.0, cp;
    return m;
}

struct FruitPose {
    double theta = 0; // rad, azimuth of the unblocked surface patch
    double phi = 0;   // rad, elevation of the unblocked surface patch
    Mat3 R_pose = Mat3::Identity();

    /// Unit vector from the fruit center toward the unblocked side. Note this
    /// is the spherical direction of (theta, phi), not a column of R_pose:
    /// R_pose pitches the X axis downward for positive phi.
    Point3 approach_dir() const {
        return {std::cos(theta) * std::cos(phi), std::sin(theta) * std::cos(phi), std::sin(phi)};
    }
};

/// Mean angular direction of the visible surface points about the estimated
/// center, clamped. Points too close to the center are skipped; if every
/// point is degenerate there is no pose and the fruit cannot be picked.
inline std::optional<FruitPose> estimate_pose(std::span<const Point3> points,
                                              const Point3& center,
                                              double clamp_rad = default_angle_clamp) {
    if (!(clamp_rad > 0)) throw std::invalid_argument("estimate_pose: clamp must be > 0");
    double theta_sum = 0, phi_sum = 0;
    std::size_t n = 0;
    for (const Point3& p : points) {
        const auto angles = point_angles(p, center);
        if (!angles) continue;
        theta_sum += angles->first;
        phi_sum += angles->second;
        ++n;
    }
    if (n == 0) return std::nullopt;
    FruitPose pose;
    pose.theta = std::clamp(theta_sum / static_cast<double>(n), -clamp_rad, clamp_rad);
    pose.phi = std::clamp(phi_sum / static_cast<double>(n), -clamp_rad, clamp_rad);
    pose.R_pose = rotation_matrix(pose.theta, pose.phi);
    return pose;
}

} // namespace orchard
