#pragma once

#include "orchard/geometry.hpp"
#include "orchard/occupancy.hpp"
#include "orchard/pose.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace orchard {

struct VerifyConfig {
    double neighborhood_r = 0.200;    // m, barrier search radius around the fruit
    double beta = 50.0;               // log base of the distance term
    double tau = 0.6;                 // confidence threshold for can_pick
    double bin_deg = 5.0;             // histogram bin width
    double cone_halfwidth_deg = 10.0; // lookup window half-width around the pose
    double d_min = 0.010;             // m, lower distance clamp
    double alpha_branch = 1.0;        // class weight: branches and trunks
    double alpha_other = 0.5;         // class weight: other elements and other fruits

    void validate() const {
        if (!(d_min > 0)) throw std::invalid_argument("VerifyConfig: d_min must be > 0");
        if (!(neighborhood_r > d_min))
            throw std::invalid_argument("VerifyConfig: need neighborhood_r > d_min");
        if (!(beta > 1)) throw std::invalid_argument("VerifyConfig: beta must be > 1");
        if (!(tau > 0 && tau < 1)) throw std::invalid_argument("VerifyConfig: tau must be in (0, 1)");
        if (!(bin_deg > 0) || std::fmod(360.0, bin_deg) != 0 || std::fmod(180.0, bin_deg) != 0)
            throw std::invalid_argument("VerifyConfig: bin_deg must evenly divide 360 and 180");
        if (!(cone_halfwidth_deg >= 0))
            throw std::invalid_argument("VerifyConfig: cone_halfwidth_deg must be >= 0");
        if (!(alpha_branch >= 0) || !(alpha_other >= 0))
            throw std::invalid_argument("VerifyConfig: class weights must be >= 0");
    }
};

namespace detail {

inline double rad_to_deg(double r) { return r * (180.0 / std::numbers::pi); }

/// Absolute circular difference of two azimuths, degrees, result in [0, 180].
inline double circ_diff_deg(double a, double b) {
    double d = std::fmod(std::abs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

} // namespace detail

/// Penalty histogram over barrier directions: azimuth bins cover
/// [-180, 180) degrees, elevation bins [-90, 90). Angles are stored and
/// queried in radians; degrees appear only in the bin geometry.
class ObstacleHistogram {
public:
    explicit ObstacleHistogram(double bin_deg = 5.0) : bin_deg_(bin_deg) {
        if (!(bin_deg > 0) || std::fmod(360.0, bin_deg) != 0 || std::fmod(180.0, bin_deg) != 0)
            throw std::invalid_argument("ObstacleHistogram: bin_deg must evenly divide 360 and 180");
        theta_bins_ = static_cast<int>(std::lround(360.0 / bin_deg));
        phi_bins_ = static_cast<int>(std::lround(180.0 / bin_deg));
        values_.assign(static_cast<std::size_t>(theta_bins_) * phi_bins_, 0.0);
    }

    double bin_deg() const { return bin_deg_; }
    int theta_bins() const { return theta_bins_; }
    int phi_bins() const { return phi_bins_; }

    /// Azimuth wraps; +180 deg is the same direction as -180 deg.
    int theta_bin(double theta_rad) const {
        double d = std::fmod(detail::rad_to_deg(theta_rad) + 180.0, 360.0);
        if (d < 0) d += 360.0;
        const int b = static_cast<int>(d / bin_deg_);
        return std::min(b, theta_bins_ - 1);
    }

    /// Elevation does not wrap; +90 deg lands in the top bin.
    int phi_bin(double phi_rad) const {
        const double d = std::clamp(detail::rad_to_deg(phi_rad) + 90.0, 0.0, 180.0);
        const int b = static_cast<int>(d / bin_deg_);
        return std::min(b, phi_bins_ - 1);
    }

    double theta_center_deg(int bt) const { return -180.0 + (bt + 0.5) * bin_deg_; }
    double phi_center_deg(int bp) const { return -90.0 + (bp + 0.5) * bin_deg_; }

    double at(int bt, int bp) const { return values_[index(bt, bp)]; }

    void add(double theta_rad, double phi_rad, double value) {
        values_[index(theta_bin(theta_rad), phi_bin(phi_rad))] += value;
    }
    void add_bin(int bt, int bp, double value) { values_[index(bt, bp)] += value; }

    /// Sum over bins whose centers lie within halfwidth_deg of the query in
    /// both axes (azimuth difference taken circularly).
    double window_sum(double theta_rad, double phi_rad, double halfwidth_deg) const {
        const double td = detail::rad_to_deg(theta_rad);
        const double pd = detail::rad_to_deg(phi_rad);
        double sum = 0;
        for (int bt = 0; bt < theta_bins_; ++bt) {
            if (detail::circ_diff_deg(theta_center_deg(bt), td) > halfwidth_deg) continue;
            for (int bp = 0; bp < phi_bins_; ++bp) {
                if (std::abs(phi_center_deg(bp) - pd) > halfwidth_deg) continue;
                sum += values_[index(bt, bp)];
            }
        }
        return sum;
    }

    double total() const {
        double s = 0;
        for (double v : values_) s += v;
        return s;
    }

private:
    std::size_t index(int bt, int bp) const {
        return static_cast<std::size_t>(bt) * phi_bins_ + bp;
    }

    double bin_deg_;
    int theta_bins_ = 0;
    int phi_bins_ = 0;
    std::vector<double> values_;
};

/// Distance term of the barrier penalty: K = 1 / log_beta(d in mm), with d
/// clamped to [d_min, neighborhood_r]. The clamp keeps the millimetre
/// logarithm above zero, so K is positive and decreasing in d.
inline double distance_term(double d_m, const VerifyConfig& cfg) {
    const double d_mm = std::clamp(d_m, cfg.d_min, cfg.neighborhood_r) * 1000.0;
    return std::log(cfg.beta) / std::log(d_mm);
}

/// Accumulates barrier penalties around one fruit: occupied obstacle voxels
/// from each map plus the centers of the other fruits, all within
/// neighborhood_r of the fruit center. Branch/trunk barriers carry
/// alpha_branch, everything else alpha_other.
inline ObstacleHistogram build_histogram(const Point3& fruit_center,
                                         std::span<const OccupancyMap* const> maps,
                                         std::span<const Sphere> other_fruits,
                                         const VerifyConfig& cfg) {
    cfg.validate();
    ObstacleHistogram hist(cfg.bin_deg);
    const auto add_barrier = [&](const Point3& b, double alpha) {
        const auto angles = point_angles(b, fruit_center);
        if (!angles) return; // a barrier on the center has no direction
        const double pv = alpha * distance_term((b - fruit_center).norm(), cfg);
        hist.add(angles->first, angles->second, pv);
    };
    for (const OccupancyMap* map : maps) {
        if (!map) continue;
        const double alpha =
            map->map_class() == ObstacleClass::branch_trunk ? cfg.alpha_branch : cfg.alpha_other;
        for (const Point3& v : map->query_radius(fruit_center, cfg.neighborhood_r))
            add_barrier(v, alpha);
    }
    for (const Sphere& s : other_fruits) {
        if ((s.center - fruit_center).norm() > cfg.neighborhood_r) continue;
        add_barrier(s.center, cfg.alpha_other);
    }
    return hist;
}

struct PickDecision {
    double window_penalty = 0;
    double confidence = 1; // in (0, 1]
    bool can_pick = true;
};

/// Maps the summed penalty in the approach cone to a confidence in (0, 1]:
/// L = 2 / (1 + exp(penalty)). Zero penalty gives exactly 1; every added
/// barrier can only lower it.
inline PickDecision confidence(const ObstacleHistogram& hist, const FruitPose& pose,
                               const VerifyConfig& cfg) {
    cfg.validate();
    PickDecision d;
    d.window_penalty = hist.window_sum(pose.theta, pose.phi, cfg.cone_halfwidth_deg);
    d.confidence = 2.0 / (1.0 + std::exp(d.window_penalty));
    d.can_pick = d.confidence >= cfg.tau;
    return d;
}

/// Composes an external penalty field (workspace limits, cable routing, ...)
/// into the histogram by sampling it at every bin center. The field takes
/// (theta, phi) in radians and must be non-negative everywhere.
inline ObstacleHistogram add_constraint_penalty(
    const ObstacleHistogram& hist, const std::function<double(double, double)>& penalty_field) {
    constexpr double deg_to_rad = std::numbers::pi / 180.0;
    ObstacleHistogram out = hist;
    for (int bt = 0; bt < out.theta_bins(); ++bt) {
        for (int bp = 0; bp < out.phi_bins(); ++bp) {
            const double pv = penalty_field(out.theta_center_deg(bt) * deg_to_rad,
                                            out.phi_center_deg(bp) * deg_to_rad);
            if (pv < 0)
                throw std::invalid_argument("add_constraint_penalty: negative penalty");
            out.add_bin(bt, bp, pv);
        }
    }
    return out;
}

} // namespace orchard
