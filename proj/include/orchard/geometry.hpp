#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace orchard {

using Point3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Sphere in metres. Fruit geometry is modelled as a sphere throughout.
struct Sphere {
    Point3 center{0.0, 0.0, 0.0};
    double radius = 0.0;
};

inline bool is_rotation(const Mat3& m, double tol = 1e-9) {
    return (m.transpose() * m - Mat3::Identity()).norm() <= tol && m.determinant() > 0.0;
}

/// Camera frame: right-handed, x right, y down, z forward along the optical axis.
/// Work frame: right-handed, X from the scene toward the camera, Z up.
/// Approach angles are defined and clamped in the work frame.
inline Mat3 default_work_rotation() {
    Mat3 r;
    r << 0.0, 0.0, -1.0,
         1.0, 0.0, 0.0,
         0.0, -1.0, 0.0;
    return r;
}

/// Fixed camera-to-work rotation, configuration-level.
struct WorkFrame {
    Mat3 rotation = default_work_rotation();

    bool valid(double tol = 1e-9) const { return is_rotation(rotation, tol); }
    Point3 to_work(const Point3& p_camera) const { return rotation * p_camera; }
    Point3 to_camera(const Point3& p_work) const { return rotation.transpose() * p_work; }
};

} // namespace orchard
