#pragma once

#include "orchard/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

namespace orchard {

struct HoughConfig {
    double center_step = 0.005;  // m
    double radius_step = 0.005;  // m
    double r_min = 0.025;        // m, smallest acceptable sphere radius
    double r_max = 0.060;        // m, largest acceptable sphere radius
    double center_margin = 0.060; // m, padding around the cloud bounding box

    void validate() const {
        if (!(center_step > 0)) throw std::invalid_argument("HoughConfig: center_step must be > 0");
        if (!(radius_step > 0)) throw std::invalid_argument("HoughConfig: radius_step must be > 0");
        if (!(r_min > 0)) throw std::invalid_argument("HoughConfig: r_min must be > 0");
        if (!(r_min < r_max)) throw std::invalid_argument("HoughConfig: need r_min < r_max");
        if (!(radius_step <= r_max - r_min))
            throw std::invalid_argument("HoughConfig: radius_step must not exceed r_max - r_min");
        if (!(center_margin >= 0)) throw std::invalid_argument("HoughConfig: center_margin must be >= 0");
    }
};

/// One quantized axis: bin t has center lo + t * step.
struct AxisGrid {
    double lo = 0;
    double step = 1;
    std::int32_t count = 0;

    double center(std::int32_t t) const { return lo + t * step; }
    friend bool operator==(const AxisGrid&, const AxisGrid&) = default;
};

/// Covers [lo, lo + width] with bin centers at both ends. The epsilon keeps
/// widths that are an exact multiple of step from gaining a spurious bin.
inline AxisGrid axis_grid(double lo, double width, double step) {
    if (!(step > 0)) throw std::invalid_argument("axis_grid: step must be > 0");
    if (!(width >= 0)) throw std::invalid_argument("axis_grid: width must be >= 0");
    AxisGrid g;
    g.lo = lo;
    g.step = step;
    g.count = static_cast<std::int32_t>(std::ceil(width / step - 1e-9)) + 1;
    return g;
}

struct HoughRanges {
    AxisGrid x, y, z, r;

    std::uint64_t total_bins() const {
        return static_cast<std::uint64_t>(x.count) * y.count * z.count * r.count;
    }
    std::uint64_t flat_index(std::int32_t ix, std::int32_t iy, std::int32_t iz,
                             std::int32_t ir) const {
        return ((static_cast<std::uint64_t>(ix) * y.count + iy) * z.count + iz) * r.count + ir;
    }
    friend bool operator==(const HoughRanges&, const HoughRanges&) = default;
};

/// Candidate grid for a cloud: centers span the bounding box plus the margin,
/// radii span the acceptance interval.
inline HoughRanges search_range(std::span<const Point3> points, const HoughConfig& cfg) {
    cfg.validate();
    if (points.empty()) throw std::invalid_argument("search_range: empty cloud");
    Point3 lo = points.front(), hi = points.front();
    for (const Point3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    HoughRanges r;
    r.x = axis_grid(lo.x() - cfg.center_margin, hi.x() - lo.x() + 2 * cfg.center_margin, cfg.center_step);
    r.y = axis_grid(lo.y() - cfg.center_margin, hi.y() - lo.y() + 2 * cfg.center_margin, cfg.center_step);
    r.z = axis_grid(lo.z() - cfg.center_margin, hi.z() - lo.z() + 2 * cfg.center_margin, cfg.center_step);
    r.r = axis_grid(cfg.r_min, cfg.r_max - cfg.r_min, cfg.radius_step);
    return r;
}

/// Integer vote accumulator over (cx, cy, cz, r) bins. Dense storage up to
/// 2^24 bins, hash map beyond that; both modes count identically and merging
/// per-thread grids is plain integer addition, so partitioning the input
/// never changes a single bin.
class HoughGrid {
public:
    explicit HoughGrid(const HoughRanges& ranges)
        : ranges_(ranges), dense_(ranges.total_bins() <= dense_limit) {
        if (ranges.x.count < 1 || ranges.y.count < 1 || ranges.z.count < 1 || ranges.r.count < 1)
            throw std::invalid_argument("HoughGrid: empty axis");
        if (dense_) dense_counts_.assign(ranges_.total_bins(), 0);
    }

    const HoughRanges& ranges() const { return ranges_; }
    bool dense() const { return dense_; }

    void add(std::uint64_t flat, std::uint32_t n = 1) {
        if (dense_) dense_counts_[flat] += n;
        else if (n) sparse_counts_[flat] += n;
    }

    std::uint32_t at(std::uint64_t flat) const {
        if (dense_) return dense_counts_[flat];
        auto it = sparse_counts_.find(flat);
        return it == sparse_counts_.end() ? 0u : it->second;
    }
    std::uint32_t at(std::int32_t ix, std::int32_t iy, std::int32_t iz, std::int32_t ir) const {
        return at(ranges_.flat_index(ix, iy, iz, ir));
    }

    HoughGrid& operator+=(const HoughGrid& other) {
        if (!(ranges_ == other.ranges_))
            throw std::invalid_argument("HoughGrid: cannot merge grids over different ranges");
        if (dense_ && other.dense_) {
            for (std::size_t i = 0; i < dense_counts_.size(); ++i)
                dense_counts_[i] += other.dense_counts_[i];
        } else {
            other.for_each_nonzero([&](std::uint64_t flat, std::uint32_t n) { add(flat, n); });
        }
        return *this;
    }

    template <typename Fn>
    void for_each_nonzero(Fn&& fn) const {
        if (dense_) {
            for (std::uint64_t i = 0; i < dense_counts_.size(); ++i)
                if (dense_counts_[i]) fn(i, dense_counts_[i]);
        } else {
            for (const auto& [flat, n] : sparse_counts_) fn(flat, n);
        }
    }

    std::uint64_t nonzero_bins() const {
        std::uint64_t n = 0;
        for_each_nonzero([&](std::uint64_t, std::uint32_t) { ++n; });
        return n;
    }

    static constexpr std::uint64_t dense_limit = std::uint64_t{1} << 24;

private:
    HoughRanges ranges_;
    bool dense_ = true;
    std::vector<std::uint32_t> dense_counts_;
    std::unordered_map<std::uint64_t, std::uint32_t> sparse_counts_;
};

namespace detail {

// Nonnegative doubles order like their bit patterns, so the bit space can be
// bisected to pin down where a monotone predicate flips.
inline std::uint64_t ordered_bits(double d) {
    std::uint64_t b;
    std::memcpy(&b, &d, sizeof b);
    return b;
}

inline double from_bits(std::uint64_t b) {
    double d;
    std::memcpy(&d, &b, sizeof d);
    return d;
}

// The reference decision for a squared center distance: -1 below the radius
// window, nr above it, otherwise the clamped nearest radius bin. Every vote
// the accumulator counts must agree with this expression exactly.
inline std::int32_t reference_radius_bin(double r2, const HoughConfig& cfg, std::int32_t nr) {
    const double r = std::sqrt(r2);
    if (r < cfg.r_min) return -1;
    if (r > cfg.r_max) return nr;
    const auto ir = static_cast<std::int32_t>(std::llround((r - cfg.r_min) / cfg.radius_step));
    return std::clamp(ir, 0, nr - 1);
}

// reference_radius_bin is nondecreasing in r2: sqrt is correctly rounded and
// monotone, and so are the subtraction, division and llround after it. Its
// exact flip points can therefore be found by bisection, and comparing r2
// against them reproduces the sqrt/llround decision bit for bit while the
// hot loop does no sqrt at all. thresholds[k] is the smallest double whose
// decision is >= k; a squared distance votes for bin k exactly when it lies
// in [thresholds[k], thresholds[k+1]).
inline std::vector<double> radius_bin_thresholds(const HoughConfig& cfg, std::int32_t nr) {
    std::vector<double> thresholds(static_cast<std::size_t>(nr) + 1);
    const double top = 4.0 * cfg.r_max * cfg.r_max + 1.0;
    for (std::int32_t k = 0; k <= nr; ++k) {
        std::uint64_t lo = 0, hi = ordered_bits(top);
        while (lo < hi) {
            const std::uint64_t mid = lo + (hi - lo) / 2;
            if (reference_radius_bin(from_bits(mid), cfg, nr) >= k) hi = mid;
            else lo = mid + 1;
        }
        thresholds[static_cast<std::size_t>(k)] = from_bits(lo);
    }
    return thresholds;
}

} // namespace detail

/// Casts every point's votes. For a candidate center c, a point votes for
/// radius bin nearest to its distance from c, provided that distance lies in
/// [r_min, r_max]. The x/y pruning and the z window only skip centers that
/// are provably outside r_max; the decisive test for every counted vote is
/// the precomputed-threshold form of the exact distance predicate a full
/// scan over all bins would apply.
inline void vote_into(HoughGrid& grid, std::span<const Point3> points, const HoughConfig& cfg) {
    cfg.validate();
    const HoughRanges& rg = grid.ranges();
    const double limit2 = cfg.r_max * cfg.r_max * (1.0 + 1e-12);
    const std::int32_t nr = rg.r.count;
    const std::vector<double> thresholds = detail::radius_bin_thresholds(cfg, nr);
    const double enter2 = thresholds.front(), exit2 = thresholds.back();

    for (const Point3& p : points) {
        for (std::int32_t ix = 0; ix < rg.x.count; ++ix) {
            const double dx = p.x() - rg.x.center(ix);
            const double dx2 = dx * dx;
            if (dx2 > limit2) continue;
            for (std::int32_t iy = 0; iy < rg.y.count; ++iy) {
                const double dy = p.y() - rg.y.center(iy);
                const double dxy2 = dx2 + dy * dy;
                if (dxy2 > limit2) continue;
                const double span = std::sqrt(limit2 - dxy2);
                const double last = static_cast<double>(rg.z.count - 1);
                const std::int32_t iz_lo = static_cast<std::int32_t>(std::clamp(
                    std::ceil((p.z() - span - rg.z.lo) / rg.z.step) - 1.0, 0.0, last));
                const std::int32_t iz_hi = static_cast<std::int32_t>(std::clamp(
                    std::floor((p.z() + span - rg.z.lo) / rg.z.step) + 1.0, 0.0, last));
                const std::uint64_t base_xy =
                    (static_cast<std::uint64_t>(ix) * rg.y.count + iy) * rg.z.count;
                for (std::int32_t iz = iz_lo; iz <= iz_hi; ++iz) {
                    const double dz = p.z() - rg.z.center(iz);
                    const double r2 = dxy2 + dz * dz;
                    if (r2 < enter2 || r2 >= exit2) continue;
                    std::int32_t ir = 0;
                    while (r2 >= thresholds[static_cast<std::size_t>(ir) + 1]) ++ir;
                    grid.add((base_xy + static_cast<std::uint64_t>(iz)) * nr +
                             static_cast<std::uint64_t>(ir));
                }
            }
        }
    }
}

/// Same result as the single-threaded call for any thread count: each worker
/// fills a private grid over identical ranges and the integer merge is order
/// independent.
inline HoughGrid vote(std::span<const Point3> points, const HoughRanges& ranges,
                      const HoughConfig& cfg, unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    HoughGrid grid(ranges);
    const std::size_t per_thread_min = 512;
    if (threads <= 1 || points.size() < 2 * per_thread_min || !grid.dense()) {
        vote_into(grid, points, cfg);
        return grid;
    }
    const std::size_t chunks = std::min<std::size_t>(threads, points.size() / per_thread_min);
    std::vector<HoughGrid> partial(chunks, HoughGrid(ranges));
    std::vector<std::thread> workers;
    workers.reserve(chunks);
    const std::size_t stride = (points.size() + chunks - 1) / chunks;
    for (std::size_t c = 0; c < chunks; ++c) {
        workers.emplace_back([&, c] {
            const std::size_t begin = c * stride;
            const std::size_t end = std::min(points.size(), begin + stride);
            vote_into(partial[c], points.subspan(begin, end - begin), cfg);
        });
    }
    for (auto& w : workers) w.join();
    for (const auto& part : partial) grid += part;
    return grid;
}

struct SphereEstimate {
    Sphere sphere;
    std::uint32_t votes = 0; // winning bin count
};

/// Argmax over the accumulator. Ties resolve to the smallest radius, then to
/// the lexicographically smallest center, so reruns and merges of the same
/// votes always report the same sphere.
inline std::optional<SphereEstimate> best_bin(const HoughGrid& grid) {
    const HoughRanges& rg = grid.ranges();
    std::uint32_t best = 0;
    std::uint64_t best_flat = 0;
    bool found = false;
    const auto indices = [&](std::uint64_t flat) {
        const std::int32_t ir = static_cast<std::int32_t>(flat % rg.r.count);
        flat /= rg.r.count;
        const std::int32_t iz = static_cast<std::int32_t>(flat % rg.z.count);
        flat /= rg.z.count;
        const std::int32_t iy = static_cast<std::int32_t>(flat % rg.y.count);
        const std::int32_t ix = static_cast<std::int32_t>(flat / rg.y.count);
        return std::array<std::int32_t, 4>{ix, iy, iz, ir};
    };
    grid.for_each_nonzero([&](std::uint64_t flat, std::uint32_t n) {
        if (!found || n > best) {
            best = n;
            best_flat = flat;
            found = true;
            return;
        }
        if (n < best) return;
        const auto a = indices(flat), b = indices(best_flat);
        const auto key = [](const std::array<std::int32_t, 4>& v) {
            return std::array<std::int32_t, 4>{v[3], v[0], v[1], v[2]};
        };
        if (key(a) < key(b)) best_flat = flat;
    });
    if (!found) return std::nullopt;
    const auto [ix, iy, iz, ir] = indices(best_flat);
    SphereEstimate est;
    est.sphere.center = Point3(rg.x.center(ix), rg.y.center(iy), rg.z.center(iz));
    est.sphere.radius = rg.r.center(ir);
    est.votes = best;
    return est;
}

inline std::optional<SphereEstimate> estimate_sphere(std::span<const Point3> points,
                                                     const HoughConfig& cfg,
                                                     unsigned threads = 0) {
    if (points.empty()) return std::nullopt;
    const HoughRanges ranges = search_range(points, cfg);
    const HoughGrid grid = vote(points, ranges, cfg, threads);
    return best_bin(grid);
}

} // namespace orchard
