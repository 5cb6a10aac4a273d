#pragma once

#include "orchard/filter.hpp"
#include "orchard/frame.hpp"
#include "orchard/geometry.hpp"
#include "orchard/hough.hpp"
#include "orchard/occupancy.hpp"
#include "orchard/pose.hpp"
#include "orchard/verify.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace orchard {

struct PipelineConfig {
    FilterConfig filter;
    HoughConfig hough;
    VerifyConfig verify;
    double map_resolution = 0.010;  // m
    std::int64_t min_region_area = 200; // px, mask components below this are noise
    double clamp_deg = 60.0;        // approach-angle clamp
    Mat3 work_rotation = default_work_rotation();
    bool verify_enabled = true;
    bool write_maps = true;
    unsigned threads = 0; // 0 = one per hardware thread

    double clamp_rad() const { return clamp_deg * std::numbers::pi / 180.0; }

    void validate() const {
        filter.validate();
        hough.validate();
        verify.validate();
        if (!(map_resolution > 0))
            throw std::invalid_argument("PipelineConfig: map_resolution must be > 0");
        if (min_region_area < 0)
            throw std::invalid_argument("PipelineConfig: min_region_area must be >= 0");
        if (!(clamp_deg > 0 && clamp_deg <= 180))
            throw std::invalid_argument("PipelineConfig: clamp_deg must be in (0, 180]");
        if (!is_rotation(work_rotation))
            throw std::invalid_argument("PipelineConfig: work_rotation is not a rotation");
    }
};

// ---------------------------------------------------------------------------
// Config file: flat `key = value` lines, '#' starts a comment. Every constant
// keeps its usual symbol name. Multi-valued keys take whitespace-separated
// numbers (r_accept, work_rotation).

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace detail

inline std::string serialize_config(const PipelineConfig& cfg) {
    const auto d = [](double v) { return detail::shortest_double(v); };
    std::ostringstream out;
    out << "# cloud filtering\n"
        << "nn_radius = " << d(cfg.filter.nn_radius) << "\n"
        << "min_neighbors = " << cfg.filter.min_neighbors << "\n"
        << "min_points = " << cfg.filter.min_points << "\n"
        << "max_axis_ratio = " << d(cfg.filter.max_axis_ratio) << "\n"
        << "downsample_voxel = " << d(cfg.filter.downsample_voxel) << "\n"
        << "# sphere search\n"
        << "center_step = " << d(cfg.hough.center_step) << "\n"
        << "radius_step = " << d(cfg.hough.radius_step) << "\n"
        << "r_accept = " << d(cfg.hough.r_min) << " " << d(cfg.hough.r_max) << "\n"
        << "center_margin = " << d(cfg.hough.center_margin) << "\n"
        << "# scenario map\n"
        << "map_resolution = " << d(cfg.map_resolution) << "\n"
        << "min_region_area = " << cfg.min_region_area << "\n"
        << "# approach pose\n"
        << "clamp_deg = " << d(cfg.clamp_deg) << "\n"
        << "# pose verification\n"
        << "neighborhood_r = " << d(cfg.verify.neighborhood_r) << "\n"
        << "beta = " << d(cfg.verify.beta) << "\n"
        << "tau = " << d(cfg.verify.tau) << "\n"
        << "bin_deg = " << d(cfg.verify.bin_deg) << "\n"
        << "cone_halfwidth_deg = " << d(cfg.verify.cone_halfwidth_deg) << "\n"
        << "d_min = " << d(cfg.verify.d_min) << "\n"
        << "alpha_branch = " << d(cfg.verify.alpha_branch) << "\n"
        << "alpha_other = " << d(cfg.verify.alpha_other) << "\n"
        << "verify_enabled = " << (cfg.verify_enabled ? "true" : "false") << "\n"
        << "# frames and output\n"
        << "work_rotation =";
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out << " " << d(cfg.work_rotation(r, c));
    out << "\n"
        << "write_maps = " << (cfg.write_maps ? "true" : "false") << "\n"
        << "threads = " << cfg.threads << "\n";
    return out.str();
}

inline PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        const auto fail = [&](const std::string& what) -> std::invalid_argument {
            return std::invalid_argument("config line " + std::to_string(lineno) + ": " + what);
        };
        if (eq == std::string::npos) throw fail("expected key = value");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) throw fail("expected key = value");
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw fail("duplicate key '" + key + "'");
        seen.push_back(key);

        std::istringstream vs(value);
        const auto num = [&](double& slot) {
            if (!(vs >> slot)) throw fail("bad number for '" + key + "'");
        };
        const auto integer = [&](auto& slot) {
            if (!(vs >> slot)) throw fail("bad integer for '" + key + "'");
        };
        const auto boolean = [&](bool& slot) {
            std::string word;
            vs >> word;
            if (word == "true") slot = true;
            else if (word == "false") slot = false;
            else throw fail("bad boolean for '" + key + "' (use true/false)");
        };

        if (key == "nn_radius") num(cfg.filter.nn_radius);
        else if (key == "min_neighbors") integer(cfg.filter.min_neighbors);
        else if (key == "min_points") integer(cfg.filter.min_points);
        else if (key == "max_axis_ratio") num(cfg.filter.max_axis_ratio);
        else if (key == "downsample_voxel") num(cfg.filter.downsample_voxel);
        else if (key == "center_step") num(cfg.hough.center_step);
        else if (key == "radius_step") num(cfg.hough.radius_step);
        else if (key == "r_accept") { num(cfg.hough.r_min); num(cfg.hough.r_max); }
        else if (key == "center_margin") num(cfg.hough.center_margin);
        else if (key == "map_resolution") num(cfg.map_resolution);
        else if (key == "min_region_area") integer(cfg.min_region_area);
        else if (key == "clamp_deg") num(cfg.clamp_deg);
        else if (key == "neighborhood_r") num(cfg.verify.neighborhood_r);
        else if (key == "beta") num(cfg.verify.beta);
        else if (key == "tau") num(cfg.verify.tau);
        else if (key == "bin_deg") num(cfg.verify.bin_deg);
        else if (key == "cone_halfwidth_deg") num(cfg.verify.cone_halfwidth_deg);
        else if (key == "d_min") num(cfg.verify.d_min);
        else if (key == "alpha_branch") num(cfg.verify.alpha_branch);
        else if (key == "alpha_other") num(cfg.verify.alpha_other);
        else if (key == "verify_enabled") boolean(cfg.verify_enabled);
        else if (key == "write_maps") boolean(cfg.write_maps);
        else if (key == "threads") integer(cfg.threads);
        else if (key == "work_rotation") {
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) num(cfg.work_rotation(r, c));
        } else {
            throw fail("unknown key '" + key + "'");
        }
        std::string leftover;
        if (vs >> leftover) throw fail("trailing value for '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const std::exception& e) {
        throw std::runtime_error("bad config file " + path.string() + ": " + e.what());
    }
}

/// Hash of the canonical serialization, so defaults and a default-valued file
/// digest identically no matter the formatting of the source file. The thread
/// count is normalized out: parallelism must never change output bytes, so it
/// must not change the digest either.
inline std::string config_digest(const PipelineConfig& cfg) {
    PipelineConfig canonical = cfg;
    canonical.threads = 0;
    const std::uint64_t h = detail::fnv1a64(serialize_config(canonical));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Per-frame results.

struct FruitDiagnostics {
    std::int64_t raw_points = 0;  // depth-valid pixels of the instance
    std::int64_t candidates = 0;  // points after downsampling
    std::uint32_t votes = 0;      // winning accumulator bin
    double window_penalty = 0;
};

struct FruitModel {
    std::uint16_t id = 0;
    Sphere sphere;                 // work frame
    std::optional<FruitPose> pose; // empty when every candidate was degenerate
    double confidence = 0;
    bool can_pick = false;
    std::string rejection; // empty, or "pose_degenerate" for modeled-but-unpickable
    FruitDiagnostics diag;
};

struct RejectedFruit {
    std::uint16_t id = 0;
    std::string reason;
};

struct StageTiming {
    std::string name;
    double ms = 0;
};

struct FrameResult {
    std::string frame_id;
    std::string config_digest;
    std::vector<FruitModel> fruits; // confidence descending, ties by id
    std::vector<RejectedFruit> rejected;
    OccupancyMap branch_map{0.010, ObstacleClass::branch_trunk};
    OccupancyMap other_map{0.010, ObstacleClass::other_element};
    std::vector<StageTiming> timing;
};

inline FrameResult process_frame(const CameraFrame& frame, const PipelineConfig& cfg,
                                 const std::string& frame_id) {
    cfg.validate();
    frame.validate();
    FrameResult res;
    res.frame_id = frame_id;
    res.config_digest = config_digest(cfg);

    using clock = std::chrono::steady_clock;
    auto mark = clock::now();
    const auto lap = [&](const char* name) {
        const auto now = clock::now();
        res.timing.push_back({name, std::chrono::duration<double, std::milli>(now - mark).count()});
        mark = now;
    };

    std::vector<ObjectCloud> clouds = extract_clouds(frame, cfg.min_region_area);
    for (ObjectCloud& c : clouds) c = rotated(c, cfg.work_rotation);
    lap("extract_clouds");

    std::vector<std::int64_t> raw_counts(clouds.size());
    for (std::size_t i = 0; i < clouds.size(); ++i) {
        raw_counts[i] = static_cast<std::int64_t>(clouds[i].size());
        clouds[i].points = euclidean_denoise(clouds[i].points, cfg.filter);
    }
    lap("denoise");

    for (const ObjectCloud& c : clouds) {
        if (c.label.kind == CloudLabel::Kind::branch_trunk)
            res.branch_map = build_map(c, cfg.map_resolution);
        else if (c.label.kind == CloudLabel::Kind::other_element)
            res.other_map = build_map(c, cfg.map_resolution);
    }
    lap("build_maps");

    // Fruit instances wiped out by the mask cleanup never reach the cloud
    // stage; report them as rejected rather than dropping them silently.
    for (std::uint16_t id : raw_fruit_ids(frame)) {
        const bool present = std::any_of(clouds.begin(), clouds.end(), [&](const ObjectCloud& c) {
            return c.label.kind == CloudLabel::Kind::fruit && c.label.instance_id == id;
        });
        if (!present) res.rejected.push_back({id, "mask_region_too_small"});
    }

    for (std::size_t i = 0; i < clouds.size(); ++i) {
        const ObjectCloud& c = clouds[i];
        if (c.label.kind != CloudLabel::Kind::fruit) continue;
        const std::uint16_t id = c.label.instance_id;

        const std::vector<Point3> candidates =
            voxel_downsample(c.points, cfg.filter.downsample_voxel);
        const DegeneracyCheck check = reject_degenerate(candidates, cfg.filter);
        if (!check.ok) {
            res.rejected.push_back({id, check.reason});
            continue;
        }
        const std::optional<SphereEstimate> fit =
            estimate_sphere(candidates, cfg.hough, cfg.threads);
        if (!fit) {
            res.rejected.push_back({id, "no_consensus"});
            continue;
        }

        FruitModel m;
        m.id = id;
        m.sphere = fit->sphere;
        m.pose = estimate_pose(candidates, fit->sphere.center, cfg.clamp_rad());
        if (!m.pose) m.rejection = "pose_degenerate";
        m.diag.raw_points = raw_counts[i];
        m.diag.candidates = static_cast<std::int64_t>(candidates.size());
        m.diag.votes = fit->votes;
        res.fruits.push_back(std::move(m));
    }
    lap("fit_fruits");

    const OccupancyMap* maps[] = {&res.branch_map, &res.other_map};
    for (FruitModel& m : res.fruits) {
        if (!m.pose) {
            m.confidence = 0;
            m.can_pick = false;
            continue;
        }
        if (!cfg.verify_enabled) {
            m.confidence = 1.0;
            m.can_pick = true;
            continue;
        }
        std::vector<Sphere> others;
        others.reserve(res.fruits.size() - 1);
        for (const FruitModel& o : res.fruits)
            if (o.id != m.id) others.push_back(o.sphere);
        const ObstacleHistogram hist =
            build_histogram(m.sphere.center, maps, others, cfg.verify);
        const PickDecision d = confidence(hist, *m.pose, cfg.verify);
        m.diag.window_penalty = d.window_penalty;
        m.confidence = d.confidence;
        m.can_pick = d.can_pick;
    }
    lap("verify");

    std::sort(res.fruits.begin(), res.fruits.end(), [](const FruitModel& a, const FruitModel& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.id < b.id;
    });
    std::sort(res.rejected.begin(), res.rejected.end(),
              [](const RejectedFruit& a, const RejectedFruit& b) { return a.id < b.id; });

    double total = 0;
    for (const StageTiming& t : res.timing) total += t.ms;
    res.timing.push_back({"total", total});
    return res;
}

inline FrameResult process_frame_dir(const std::filesystem::path& frame_dir,
                                     const PipelineConfig& cfg) {
    const CameraFrame frame = load_frame(frame_dir);
    std::string id = frame_dir.filename().string();
    if (id.empty()) id = frame_dir.parent_path().filename().string();
    return process_frame(frame, cfg, id);
}

// ---------------------------------------------------------------------------
// Output files. nlohmann's default object keeps keys sorted and prints
// shortest round-trip doubles, which together with the sorted fruit order
// makes the byte stream a pure function of the result values.

inline nlohmann::json pick_list_json(const FrameResult& res) {
    nlohmann::json j;
    j["frame_id"] = res.frame_id;
    j["config_digest"] = res.config_digest;
    j["confidence_model"] = "L = 2/(1 + exp(window_penalty))";
    j["fruits"] = nlohmann::json::array();
    for (const FruitModel& m : res.fruits) {
        nlohmann::json f;
        f["id"] = m.id;
        f["center_m"] = {m.sphere.center.x(), m.sphere.center.y(), m.sphere.center.z()};
        f["radius_m"] = m.sphere.radius;
        if (m.pose) {
            f["theta_rad"] = m.pose->theta;
            f["phi_rad"] = m.pose->phi;
            nlohmann::json rows = nlohmann::json::array();
            for (int r = 0; r < 3; ++r)
                rows.push_back({m.pose->R_pose(r, 0), m.pose->R_pose(r, 1), m.pose->R_pose(r, 2)});
            f["R_pose"] = rows;
            const Point3 a = m.pose->approach_dir();
            f["approach_dir"] = {a.x(), a.y(), a.z()};
        } else {
            f["theta_rad"] = nullptr;
            f["phi_rad"] = nullptr;
            f["R_pose"] = nullptr;
            f["approach_dir"] = nullptr;
        }
        f["confidence"] = m.confidence;
        f["can_pick"] = m.can_pick;
        f["rejection"] = m.rejection;
        f["diagnostics"] = {{"raw_points", m.diag.raw_points},
                            {"candidates", m.diag.candidates},
                            {"votes", m.diag.votes},
                            {"window_penalty", m.diag.window_penalty}};
        j["fruits"].push_back(f);
    }
    j["rejected"] = nlohmann::json::array();
    for (const RejectedFruit& r : res.rejected)
        j["rejected"].push_back({{"id", r.id}, {"reason", r.reason}});
    return j;
}

inline void write_outputs(const FrameResult& res, const std::filesystem::path& out_dir,
                          const PipelineConfig& cfg) {
    std::filesystem::create_directories(out_dir);
    {
        const auto path = out_dir / "pick_list.json";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write pick list: " + path.string());
        out << pick_list_json(res).dump(2) << "\n";
    }
    if (cfg.write_maps) {
        save_voxmap(out_dir / "branch_trunk.voxmap", res.branch_map);
        save_voxmap(out_dir / "other_element.voxmap", res.other_map);
    }
    {
        const auto path = out_dir / "timing.txt";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write timing report: " + path.string());
        out << "stage            ms\n";
        char line[64];
        for (const StageTiming& t : res.timing) {
            std::snprintf(line, sizeof(line), "%-14s %8.3f\n", t.name.c_str(), t.ms);
            out << line;
        }
    }
}

} // namespace orchard
