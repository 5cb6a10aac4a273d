#pragma once

#include "orchard/camera.hpp"
#include "orchard/frame.hpp"
#include "orchard/geometry.hpp"
#include "orchard/image.hpp"
#include "orchard/pose.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace orchard {

struct FruitSpec {
    std::uint16_t id = 0;
    Point3 center{0, 0, 0}; // camera frame
    double radius = 0;
};

struct BranchSpec {
    Point3 a{0, 0, 0}, b{0, 0, 0}; // camera frame, capped cylinder endpoints
    double radius = 0;
};

struct BoxSpec {
    Point3 lo{0, 0, 0}, hi{0, 0, 0}; // camera frame, axis-aligned
};

struct SceneSpec {
    CameraIntrinsics intrinsics;
    std::vector<FruitSpec> fruits;
    std::vector<BranchSpec> branches;
    std::vector<BoxSpec> boxes;
    double noise_sigma = 0; // m, std of additive depth noise
    Mat3 work_rotation = default_work_rotation();

    void validate() const {
        intrinsics.validate();
        if (!(noise_sigma >= 0)) throw std::invalid_argument("SceneSpec: noise_sigma must be >= 0");
        if (!is_rotation(work_rotation))
            throw std::invalid_argument("SceneSpec: work_rotation is not a rotation");
        std::set<std::uint16_t> ids;
        for (const auto& f : fruits) {
            if (f.id == 0) throw std::invalid_argument("SceneSpec: fruit id 0 is reserved");
            if (!ids.insert(f.id).second)
                throw std::invalid_argument("SceneSpec: duplicate fruit id " + std::to_string(f.id));
            if (!(f.radius > 0)) throw std::invalid_argument("SceneSpec: fruit radius must be > 0");
        }
        for (const auto& br : branches) {
            if (!(br.radius > 0)) throw std::invalid_argument("SceneSpec: branch radius must be > 0");
            if ((br.b - br.a).norm() == 0)
                throw std::invalid_argument("SceneSpec: branch endpoints coincide");
        }
        for (const auto& bx : boxes)
            if (!(bx.lo.x() < bx.hi.x() && bx.lo.y() < bx.hi.y() && bx.lo.z() < bx.hi.z()))
                throw std::invalid_argument("SceneSpec: box needs lo < hi on every axis");
    }
};

namespace detail {

// Counter-based noise: every pixel hashes (seed, pixel index) independently,
// so the image is identical no matter how rendering is ordered or split.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double unit_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53; // [0, 1)
}

inline double standard_gaussian(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t s = splitmix64(seed ^ splitmix64(index + 0x51ed2701fb2d6e1bULL));
    const double u1 = std::max(unit_double(splitmix64(s)), 0x1.0p-60);
    const double u2 = unit_double(splitmix64(s ^ 0xa511e9b3cc95f7adULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// All intersections are solved for z, the depth-axis coordinate, along the
// ray z * dir where dir = ((u-cx)/fx, (v-cy)/fy, 1). Returned z is the
// nearest strictly positive solution.
inline constexpr double min_hit_z = 1e-9;

inline std::optional<double> nearest_positive(double z0, double z1) {
    double lo = std::min(z0, z1), hi = std::max(z0, z1);
    if (lo > min_hit_z) return lo;
    if (hi > min_hit_z) return hi;
    return std::nullopt;
}

inline std::optional<double> hit_sphere(const Point3& dir, const Point3& c, double r) {
    const double a = dir.squaredNorm();
    const double b = -2.0 * dir.dot(c);
    const double k = c.squaredNorm() - r * r;
    const double disc = b * b - 4 * a * k;
    if (disc < 0) return std::nullopt;
    const double sq = std::sqrt(disc);
    return nearest_positive((-b - sq) / (2 * a), (-b + sq) / (2 * a));
}

inline std::optional<double> hit_capped_cylinder(const Point3& dir, const Point3& a,
                                                 const Point3& b, double r) {
    const Point3 axis = b - a;
    const double len = axis.norm();
    const Point3 u = axis / len;
    std::optional<double> best;
    const auto consider = [&](double z) {
        if (z > min_hit_z && (!best || z < *best)) best = z;
    };

    // Side wall: component of (z*dir - a) perpendicular to the axis has norm r.
    const Point3 dp = dir - dir.dot(u) * u;
    const Point3 ap = a - a.dot(u) * u;
    const double qa = dp.squaredNorm();
    if (qa > 0) {
        const double qb = -2.0 * dp.dot(ap);
        const double qc = ap.squaredNorm() - r * r;
        const double disc = qb * qb - 4 * qa * qc;
        if (disc >= 0) {
            const double sq = std::sqrt(disc);
            for (double z : {(-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)}) {
                const double s = (z * dir - a).dot(u);
                if (s >= 0 && s <= len) consider(z);
            }
        }
    }

    // End caps: disks of radius r in the planes through a and b.
    const double du = dir.dot(u);
    if (du != 0) {
        for (const Point3& e : {a, b}) {
            const double z = e.dot(u) / du;
            if ((z * dir - e).squaredNorm() <= r * r) consider(z);
        }
    }
    return best;
}

inline std::optional<double> hit_box(const Point3& dir, const Point3& lo, const Point3& hi) {
    double z_near = -std::numeric_limits<double>::infinity();
    double z_far = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (dir[i] == 0) {
            if (lo[i] > 0 || hi[i] < 0) return std::nullopt;
            continue;
        }
        double t0 = lo[i] / dir[i], t1 = hi[i] / dir[i];
        if (t0 > t1) std::swap(t0, t1);
        z_near = std::max(z_near, t0);
        z_far = std::min(z_far, t1);
    }
    if (z_near > z_far) return std::nullopt;
    return nearest_positive(z_near, z_far);
}

} // namespace detail

struct FruitTruth {
    std::uint16_t id = 0;
    Point3 center_work{0, 0, 0};
    double radius = 0;
    std::int64_t visible_pixels = 0;
    bool visible = false;
    double theta_star = 0; // mean visible-surface angles about the true center,
    double phi_star = 0;   // work frame; meaningful only when visible
};

struct RenderResult {
    CameraFrame frame;
    Image<double> exact_depth; // noise-free depth-axis distance, 0 = no hit
    std::vector<FruitTruth> fruits;
    std::uint64_t seed = 0;
    double noise_sigma = 0;
};

inline RenderResult render_scene(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    const int w = spec.intrinsics.width;
    const int h = spec.intrinsics.height;

    RenderResult res;
    res.seed = seed;
    res.noise_sigma = spec.noise_sigma;
    res.frame.intrinsics = spec.intrinsics;
    res.frame.depth = Image<std::uint16_t>(w, h, 0);
    res.frame.fruit_mask = Image<std::uint16_t>(w, h, 0);
    res.frame.semantic_mask = Image<std::uint8_t>(w, h, 0);
    res.exact_depth = Image<double>(w, h, 0.0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Point3 dir((x - spec.intrinsics.cx) / spec.intrinsics.fx,
                             (y - spec.intrinsics.cy) / spec.intrinsics.fy, 1.0);
            double best = std::numeric_limits<double>::infinity();
            std::uint16_t fruit_id = 0;
            std::uint8_t semantic = 0;
            const auto consider = [&](std::optional<double> z, std::uint16_t id, std::uint8_t cls) {
                if (z && *z < best) {
                    best = *z;
                    fruit_id = id;
                    semantic = cls;
                }
            };
            for (const auto& f : spec.fruits)
                consider(detail::hit_sphere(dir, f.center, f.radius), f.id, 0);
            for (const auto& br : spec.branches)
                consider(detail::hit_capped_cylinder(dir, br.a, br.b, br.radius), 0,
                         static_cast<std::uint8_t>(SemanticClass::branch_trunk));
            for (const auto& bx : spec.boxes)
                consider(detail::hit_box(dir, bx.lo, bx.hi), 0,
                         static_cast<std::uint8_t>(SemanticClass::other_element));
            if (!std::isfinite(best)) continue;

            res.exact_depth(x, y) = best;
            res.frame.fruit_mask(x, y) = fruit_id;
            res.frame.semantic_mask(x, y) = semantic;

            double z = best;
            if (spec.noise_sigma > 0) {
                const std::uint64_t idx = static_cast<std::uint64_t>(y) * w + x;
                z += spec.noise_sigma * detail::standard_gaussian(seed, idx);
            }
            z = std::max(z, 0.0);
            const double units = std::round(z / spec.intrinsics.depth_scale);
            res.frame.depth(x, y) =
                static_cast<std::uint16_t>(std::clamp(units, 0.0, 65535.0));
        }
    }

    // Ground-truth pose angles: average the noise-free back-projected fruit
    // pixels about the true center, in the work frame.
    for (const auto& f : spec.fruits) {
        FruitTruth t;
        t.id = f.id;
        t.center_work = spec.work_rotation * f.center;
        t.radius = f.radius;
        double theta_sum = 0, phi_sum = 0;
        std::int64_t n = 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (res.frame.fruit_mask(x, y) != f.id) continue;
                ++t.visible_pixels;
                const Point3 p =
                    spec.work_rotation *
                    backproject_z(x, y, res.exact_depth(x, y), spec.intrinsics);
                const auto angles = point_angles(p, t.center_work);
                if (!angles) continue;
                theta_sum += angles->first;
                phi_sum += angles->second;
                ++n;
            }
        }
        if (n > 0) {
            t.visible = true;
            t.theta_star = theta_sum / static_cast<double>(n);
            t.phi_star = phi_sum / static_cast<double>(n);
        }
        res.fruits.push_back(t);
    }
    return res;
}

/// Ground-truth angles for one fruit of an already rendered scene.
inline std::optional<std::pair<double, double>> analytic_visible_angles(const RenderResult& res,
                                                                        std::uint16_t fruit_id) {
    for (const auto& f : res.fruits)
        if (f.id == fruit_id)
            return f.visible ? std::make_optional(std::make_pair(f.theta_star, f.phi_star))
                             : std::nullopt;
    throw std::invalid_argument("analytic_visible_angles: unknown fruit id " +
                                std::to_string(fruit_id));
}

namespace detail {

inline nlohmann::json vec3_to_json(const Point3& p) {
    return nlohmann::json::array({p.x(), p.y(), p.z()});
}

inline Point3 vec3_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("expected a 3-element array");
    return Point3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline nlohmann::json mat3_to_json(const Mat3& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
        rows.push_back(nlohmann::json::array({m(r, 0), m(r, 1), m(r, 2)}));
    return rows;
}

inline Mat3 mat3_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("expected a 3x3 array");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        if (!j[r].is_array() || j[r].size() != 3)
            throw std::invalid_argument("expected a 3x3 array");
        for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

} // namespace detail

inline nlohmann::json scene_to_json(const SceneSpec& spec) {
    nlohmann::json j;
    j["intrinsics"] = intrinsics_to_json(spec.intrinsics);
    j["noise_sigma"] = spec.noise_sigma;
    j["work_rotation"] = detail::mat3_to_json(spec.work_rotation);
    j["fruits"] = nlohmann::json::array();
    for (const auto& f : spec.fruits)
        j["fruits"].push_back({{"id", f.id},
                               {"center", detail::vec3_to_json(f.center)},
                               {"radius", f.radius}});
    j["branches"] = nlohmann::json::array();
    for (const auto& b : spec.branches)
        j["branches"].push_back({{"a", detail::vec3_to_json(b.a)},
                                 {"b", detail::vec3_to_json(b.b)},
                                 {"radius", b.radius}});
    j["boxes"] = nlohmann::json::array();
    for (const auto& b : spec.boxes)
        j["boxes"].push_back({{"lo", detail::vec3_to_json(b.lo)},
                              {"hi", detail::vec3_to_json(b.hi)}});
    return j;
}

inline SceneSpec scene_from_json(const nlohmann::json& j) {
    SceneSpec spec;
    spec.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    if (j.contains("work_rotation")) spec.work_rotation = detail::mat3_from_json(j["work_rotation"]);
    for (const auto& f : j.value("fruits", nlohmann::json::array())) {
        FruitSpec fs;
        fs.id = f.at("id").get<std::uint16_t>();
        fs.center = detail::vec3_from_json(f.at("center"));
        fs.radius = f.at("radius").get<double>();
        spec.fruits.push_back(fs);
    }
    for (const auto& b : j.value("branches", nlohmann::json::array())) {
        BranchSpec bs;
        bs.a = detail::vec3_from_json(b.at("a"));
        bs.b = detail::vec3_from_json(b.at("b"));
        bs.radius = b.at("radius").get<double>();
        spec.branches.push_back(bs);
    }
    for (const auto& b : j.value("boxes", nlohmann::json::array())) {
        BoxSpec bx;
        bx.lo = detail::vec3_from_json(b.at("lo"));
        bx.hi = detail::vec3_from_json(b.at("hi"));
        spec.boxes.push_back(bx);
    }
    spec.validate();
    return spec;
}

inline SceneSpec load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        return scene_from_json(j);
    } catch (const std::exception& e) {
        throw std::runtime_error("bad scene file " + path.string() + ": " + e.what());
    }
}

inline void save_scene(const std::filesystem::path& path, const SceneSpec& spec) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scene file: " + path.string());
    out << scene_to_json(spec).dump(2) << "\n";
}

inline nlohmann::json ground_truth_to_json(const RenderResult& res) {
    nlohmann::json j;
    j["seed"] = res.seed;
    j["noise_sigma"] = res.noise_sigma;
    j["fruits"] = nlohmann::json::array();
    for (const auto& f : res.fruits) {
        nlohmann::json fj{{"id", f.id},
                          {"center_work_m", detail::vec3_to_json(f.center_work)},
                          {"radius_m", f.radius},
                          {"visible_pixels", f.visible_pixels},
                          {"visible", f.visible}};
        if (f.visible) {
            fj["theta_rad"] = f.theta_star;
            fj["phi_rad"] = f.phi_star;
        }
        j["fruits"].push_back(fj);
    }
    return j;
}

/// Renders and writes the full frame directory an ingest pass consumes, plus
/// ground_truth.json for scoring.
inline RenderResult render_frame(const SceneSpec& spec, const std::filesystem::path& out_dir,
                                 std::uint64_t seed) {
    RenderResult res = render_scene(spec, seed);
    save_frame(out_dir, res.frame);
    std::ofstream out(out_dir / "ground_truth.json");
    if (!out)
        throw std::runtime_error("cannot write ground truth file: " +
                                 (out_dir / "ground_truth.json").string());
    out << ground_truth_to_json(res).dump(2) << "\n";
    return res;
}

} // namespace orchard
