#pragma once

#include "orchard/cloud.hpp"
#include "orchard/voxel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace orchard {

enum class ObstacleClass : std::uint8_t { branch_trunk, other_element };

inline std::string to_string(ObstacleClass c) {
    return c == ObstacleClass::branch_trunk ? "branch_trunk" : "other_element";
}

inline ObstacleClass obstacle_class_from_string(const std::string& s) {
    if (s == "branch_trunk") return ObstacleClass::branch_trunk;
    if (s == "other_element") return ObstacleClass::other_element;
    throw std::invalid_argument("unknown obstacle class: " + s);
}

/// Sparse binary voxel map of one obstacle class. A voxel is either occupied
/// or free; a point occupies the voxel containing it and the voxel's
/// representative position is its center.
class OccupancyMap {
public:
    OccupancyMap() = default;
    OccupancyMap(double resolution, ObstacleClass cls) : res_(resolution), class_(cls) {
        if (!(resolution > 0)) throw std::invalid_argument("OccupancyMap: resolution must be > 0");
    }

    double resolution() const { return res_; }
    ObstacleClass map_class() const { return class_; }
    std::size_t size() const { return voxels_.size(); }
    bool empty() const { return voxels_.empty(); }

    void insert_point(const Point3& p) { voxels_.insert(key_of(p, res_)); }
    void insert_key(const VoxelKey& k) { voxels_.insert(k); }

    bool occupied(const VoxelKey& k) const { return voxels_.count(k) != 0; }
    bool occupied(const Point3& p) const { return occupied(key_of(p, res_)); }

    const std::unordered_set<VoxelKey, VoxelKeyHash>& voxels() const { return voxels_; }

    /// Occupied voxel centers in ascending interleaved-coordinate order, the
    /// canonical order used by the text format.
    std::vector<VoxelKey> keys_sorted() const {
        std::vector<VoxelKey> keys(voxels_.begin(), voxels_.end());
        std::sort(keys.begin(), keys.end(), [](const VoxelKey& a, const VoxelKey& b) {
            return morton_code(a) < morton_code(b);
        });
        return keys;
    }

    /// Occupied voxel centers with ||center - q|| <= radius (closed ball),
    /// sorted by distance to q, ties by canonical key order.
    std::vector<Point3> query_radius(const Point3& q, double radius) const {
        if (!(radius >= 0)) throw std::invalid_argument("query_radius: radius must be >= 0");
        std::vector<VoxelKey> hits;
        const VoxelKey lo = key_of(q - Point3::Constant(radius), res_);
        const VoxelKey hi = key_of(q + Point3::Constant(radius), res_);
        const std::int64_t box = static_cast<std::int64_t>(hi.i - lo.i + 1) *
                                 (hi.j - lo.j + 1) * (hi.k - lo.k + 1);
        const double r2 = radius * radius;
        if (box < static_cast<std::int64_t>(voxels_.size())) {
            for (std::int32_t i = lo.i; i <= hi.i; ++i)
                for (std::int32_t j = lo.j; j <= hi.j; ++j)
                    for (std::int32_t k = lo.k; k <= hi.k; ++k) {
                        const VoxelKey key{i, j, k};
                        if (voxels_.count(key) && (center_of(key, res_) - q).squaredNorm() <= r2)
                            hits.push_back(key);
                    }
        } else {
            for (const VoxelKey& key : voxels_)
                if ((center_of(key, res_) - q).squaredNorm() <= r2) hits.push_back(key);
        }
        std::sort(hits.begin(), hits.end(), [&](const VoxelKey& a, const VoxelKey& b) {
            const double da = (center_of(a, res_) - q).squaredNorm();
            const double db = (center_of(b, res_) - q).squaredNorm();
            if (da != db) return da < db;
            return morton_code(a) < morton_code(b);
        });
        std::vector<Point3> centers;
        centers.reserve(hits.size());
        for (const VoxelKey& key : hits) centers.push_back(center_of(key, res_));
        return centers;
    }

    friend bool operator==(const OccupancyMap& a, const OccupancyMap& b) {
        return a.res_ == b.res_ && a.class_ == b.class_ && a.voxels_ == b.voxels_;
    }

private:
    double res_ = 0.010;
    ObstacleClass class_ = ObstacleClass::branch_trunk;
    std::unordered_set<VoxelKey, VoxelKeyHash> voxels_;
};

/// Rasterizes an obstacle cloud. Fruit clouds are never map sources; pass
/// them here and you get an exception, not a silently poisoned map.
inline OccupancyMap build_map(const ObjectCloud& cloud, double resolution) {
    ObstacleClass cls;
    switch (cloud.label.kind) {
    case CloudLabel::Kind::branch_trunk: cls = ObstacleClass::branch_trunk; break;
    case CloudLabel::Kind::other_element: cls = ObstacleClass::other_element; break;
    default:
        throw std::invalid_argument("build_map: cloud labeled '" + to_string(cloud.label.kind) +
                                    "' is not an obstacle class");
    }
    OccupancyMap map(resolution, cls);
    for (const Point3& p : cloud.points) map.insert_point(p);
    return map;
}

namespace detail {

inline std::string shortest_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("double formatting failed");
    return std::string(buf, end);
}

} // namespace detail

/// Text format, one map per file:
///   voxmap v1 <resolution> <class> <count>
///   <cx> <cy> <cz>          (count lines, voxel centers, %.6f, canonical order)
inline void save_voxmap(const std::filesystem::path& path, const OccupancyMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open voxmap file for writing: " + path.string());
    out << "voxmap v1 " << detail::shortest_double(map.resolution()) << ' '
        << to_string(map.map_class()) << ' ' << map.size() << '\n';
    char line[96];
    for (const VoxelKey& key : map.keys_sorted()) {
        const Point3 c = center_of(key, map.resolution());
        std::snprintf(line, sizeof(line), "%.6f %.6f %.6f\n", c.x(), c.y(), c.z());
        out << line;
    }
    if (!out) throw std::runtime_error("failed writing voxmap file: " + path.string());
}

inline OccupancyMap load_voxmap(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open voxmap file: " + path.string());
    const auto fail = [&](const std::string& what) -> std::runtime_error {
        return std::runtime_error("bad voxmap file " + path.string() + ": " + what);
    };
    std::string magic, version, cls_name;
    double res = 0;
    std::size_t count = 0;
    if (!(in >> magic >> version >> res >> cls_name >> count)) throw fail("truncated header");
    if (magic != "voxmap" || version != "v1") throw fail("not a voxmap v1 header");
    if (!(res > 0)) throw fail("non-positive resolution");
    OccupancyMap map(res, obstacle_class_from_string(cls_name));
    for (std::size_t n = 0; n < count; ++n) {
        double x = 0, y = 0, z = 0;
        if (!(in >> x >> y >> z)) throw fail("truncated voxel list");
        // Centers sit mid-cell, so reading back at 1e-6 precision recovers
        // the integer key exactly for any resolution above a few microns.
        map.insert_key(VoxelKey{static_cast<std::int32_t>(std::llround(x / res - 0.5)),
                                static_cast<std::int32_t>(std::llround(y / res - 0.5)),
                                static_cast<std::int32_t>(std::llround(z / res - 0.5))});
    }
    if (map.size() != count) throw fail("duplicate voxels in list");
    return map;
}

} // namespace orchard
