#pragma once

#include "orchard/geometry.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace orchard {

enum class SemanticClass : std::uint8_t {
    background = 0,
    branch_trunk = 1,
    other_element = 2,
};

struct CloudLabel {
    enum class Kind : std::uint8_t { fruit, branch_trunk, other_element };

    Kind kind = Kind::fruit;
    std::uint16_t instance_id = 0; // meaningful only for fruit

    static CloudLabel fruit(std::uint16_t id) { return {Kind::fruit, id}; }
    static CloudLabel branch() { return {Kind::branch_trunk, 0}; }
    static CloudLabel other() { return {Kind::other_element, 0}; }

    friend bool operator==(const CloudLabel&, const CloudLabel&) = default;
};

inline std::string to_string(CloudLabel::Kind k) {
    switch (k) {
    case CloudLabel::Kind::fruit: return "fruit";
    case CloudLabel::Kind::branch_trunk: return "branch_trunk";
    case CloudLabel::Kind::other_element: return "other_element";
    }
    throw std::logic_error("unknown cloud label kind");
}

/// Labeled 3-D point set for one fruit instance or one semantic class.
/// Construction from a frame yields one point per contributing pixel, so
/// points are distinct; filters only ever keep subsets or cell centroids.
struct ObjectCloud {
    std::vector<Point3> points;
    CloudLabel label;
    std::size_t source_pixel_count = 0;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

/// Axis-aligned bounding box extents, max - min per axis. Empty cloud -> zeros.
inline std::array<double, 3> axis_extents(const std::vector<Point3>& points) {
    if (points.empty()) return {0.0, 0.0, 0.0};
    Point3 lo = points.front();
    Point3 hi = points.front();
    for (const Point3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return {hi.x() - lo.x(), hi.y() - lo.y(), hi.z() - lo.z()};
}

inline std::array<double, 3> axis_extents(const ObjectCloud& cloud) {
    return axis_extents(cloud.points);
}

inline ObjectCloud rotated(const ObjectCloud& cloud, const Mat3& rotation) {
    ObjectCloud out;
    out.label = cloud.label;
    out.source_pixel_count = cloud.source_pixel_count;
    out.points.reserve(cloud.points.size());
    for (const Point3& p : cloud.points) out.points.push_back(rotation * p);
    return out;
}

} // namespace orchard
