#pragma once

#include "orchard/cloud.hpp"
#include "orchard/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace orchard {

struct FilterConfig {
    double nn_radius = 0.010;       // m, closed-ball neighbor radius
    int min_neighbors = 4;          // neighbors required to keep a point (self excluded)
    int min_points = 30;            // candidate points required to attempt a fit
    double max_axis_ratio = 3.0;    // reject slab- or rod-shaped clusters
    double downsample_voxel = 0.005; // m

    void validate() const {
        if (!(nn_radius > 0)) throw std::invalid_argument("FilterConfig: nn_radius must be > 0");
        if (min_neighbors < 0) throw std::invalid_argument("FilterConfig: min_neighbors must be >= 0");
        if (min_points < 1) throw std::invalid_argument("FilterConfig: min_points must be >= 1");
        if (!(max_axis_ratio >= 1)) throw std::invalid_argument("FilterConfig: max_axis_ratio must be >= 1");
        if (!(downsample_voxel > 0)) throw std::invalid_argument("FilterConfig: downsample_voxel must be > 0");
    }
};

/// Radius-outlier removal: keeps points with at least min_neighbors other
/// points within nn_radius (closed ball). Order of survivors is preserved.
/// All neighbor decisions are made against the input cloud, so removal of one
/// outlier never cascades into its former neighbors.
inline std::vector<Point3> euclidean_denoise(const std::vector<Point3>& points,
                                             double nn_radius, int min_neighbors) {
    if (!(nn_radius > 0)) throw std::invalid_argument("euclidean_denoise: nn_radius must be > 0");
    if (min_neighbors < 0) throw std::invalid_argument("euclidean_denoise: min_neighbors must be >= 0");
    if (min_neighbors == 0) return points;

    std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> grid;
    grid.reserve(points.size());
    for (std::uint32_t i = 0; i < points.size(); ++i)
        grid[key_of(points[i], nn_radius)].push_back(i);

    const double r2 = nn_radius * nn_radius;
    std::vector<Point3> kept;
    kept.reserve(points.size());
    for (std::uint32_t i = 0; i < points.size(); ++i) {
        const Point3& p = points[i];
        const VoxelKey home = key_of(p, nn_radius);
        int found = 0;
        for (int di = -1; di <= 1 && found < min_neighbors; ++di) {
            for (int dj = -1; dj <= 1 && found < min_neighbors; ++dj) {
                for (int dk = -1; dk <= 1 && found < min_neighbors; ++dk) {
                    auto it = grid.find(VoxelKey{home.i + di, home.j + dj, home.k + dk});
                    if (it == grid.end()) continue;
                    for (std::uint32_t j : it->second) {
                        if (j == i) continue;
                        if ((points[j] - p).squaredNorm() <= r2) {
                            if (++found >= min_neighbors) break;
                        }
                    }
                }
            }
        }
        if (found >= min_neighbors) kept.push_back(p);
    }
    return kept;
}

inline std::vector<Point3> euclidean_denoise(const std::vector<Point3>& points,
                                             const FilterConfig& cfg) {
    cfg.validate();
    return euclidean_denoise(points, cfg.nn_radius, cfg.min_neighbors);
}

/// Voxel-grid downsampling: one centroid per occupied voxel. Output voxels
/// appear in first-occurrence order of the input points, which keeps the
/// result deterministic without any spatial sort.
inline std::vector<Point3> voxel_downsample(const std::vector<Point3>& points, double voxel) {
    if (!(voxel > 0)) throw std::invalid_argument("voxel_downsample: voxel must be > 0");
    struct Acc {
        Point3 sum{0, 0, 0};
        std::int64_t n = 0;
        std::uint32_t order = 0;
    };
    std::unordered_map<VoxelKey, Acc, VoxelKeyHash> cells;
    cells.reserve(points.size());
    std::uint32_t next_order = 0;
    for (const Point3& p : points) {
        Acc& a = cells[key_of(p, voxel)];
        if (a.n == 0) a.order = next_order++;
        a.sum += p;
        ++a.n;
    }
    std::vector<Point3> out(cells.size(), Point3::Zero());
    for (const auto& [key, a] : cells) out[a.order] = a.sum / static_cast<double>(a.n);
    return out;
}

struct DegeneracyCheck {
    bool ok = false;
    std::string reason; // empty when ok
};

/// Gate that runs on the downsampled candidate set, just before the fit.
/// Extents are floored at the downsample voxel size so a one-voxel-thin axis
/// (extent 0 after collapsing to centroids) does not divide by zero.
inline DegeneracyCheck reject_degenerate(const std::vector<Point3>& candidates,
                                         const FilterConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(candidates.size()) < cfg.min_points)
        return {false, "insufficient_points"};
    const auto ext = axis_extents(candidates);
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (double e : ext) {
        // Flat axes are floored at the voxel size so a thin-but-real cap is
        // not compared against a near-zero extent.
        const double f = std::max(e, cfg.downsample_voxel);
        lo = std::min(lo, f);
        hi = std::max(hi, f);
    }
    if (hi > cfg.max_axis_ratio * lo) return {false, "axis_imbalance"};
    return {true, {}};
}

} // namespace orchard
