#pragma once

#include "orchard/camera.hpp"
#include "orchard/cloud.hpp"
#include "orchard/image.hpp"
#include "orchard/mask_ops.hpp"
#include "orchard/png_io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace orchard {

/// Input bundle for one control iteration: depth image plus precomputed
/// instance and semantic masks. Depth value 0 marks a sensing hole.
struct CameraFrame {
    Image<std::uint16_t> depth;
    Image<std::uint16_t> fruit_mask;    // pixel value = fruit instance id, 0 = background
    Image<std::uint8_t> semantic_mask;  // SemanticClass values
    CameraIntrinsics intrinsics;

    void validate() const {
        intrinsics.validate();
        const int w = intrinsics.width;
        const int h = intrinsics.height;
        if (!depth.same_size(w, h) || !fruit_mask.same_size(w, h) || !semantic_mask.same_size(w, h))
            throw std::invalid_argument("CameraFrame: depth/mask dimensions disagree with intrinsics");
    }
};

inline CameraFrame load_frame(const std::filesystem::path& dir) {
    CameraFrame frame;
    frame.intrinsics = load_intrinsics(dir / "intrinsics.json");
    frame.depth = read_png_gray16(dir / "depth.png");
    frame.fruit_mask = read_png_gray16(dir / "fruit_mask.png");
    frame.semantic_mask = read_png_gray8(dir / "semantic_mask.png");
    try {
        frame.validate();
    } catch (const std::exception& e) {
        throw std::runtime_error("bad frame " + dir.string() + ": " + e.what());
    }
    return frame;
}

inline void save_frame(const std::filesystem::path& dir, const CameraFrame& frame) {
    std::filesystem::create_directories(dir);
    write_png_gray16(dir / "depth.png", frame.depth);
    write_png_gray16(dir / "fruit_mask.png", frame.fruit_mask);
    write_png_gray8(dir / "semantic_mask.png", frame.semantic_mask);
    save_intrinsics(dir / "intrinsics.json", frame.intrinsics);
}

/// Back-projects the frame into per-object point clouds, camera frame.
///
/// Masks are cleaned first: 8-connected regions smaller than min_region_area
/// are dropped, per fruit instance and per semantic class. Fruit pixels never
/// contribute to obstacle clouds, even when their instance was dropped by the
/// cleanup. Zero-depth pixels are skipped everywhere.
///
/// Returns fruit clouds in ascending instance id, then exactly one
/// branch_trunk cloud and one other_element cloud (possibly empty).
inline std::vector<ObjectCloud> extract_clouds(const CameraFrame& frame,
                                               std::int64_t min_region_area) {
    frame.validate();
    const int w = frame.intrinsics.width;
    const int h = frame.intrinsics.height;

    const Image<std::uint8_t> fruit_keep = keep_large_components(frame.fruit_mask, min_region_area);

    // Semantic classes are cleaned independently of each other.
    Image<std::uint8_t> branch_bin(w, h, 0);
    Image<std::uint8_t> other_bin(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto s = static_cast<SemanticClass>(frame.semantic_mask(x, y));
            if (s == SemanticClass::branch_trunk) branch_bin(x, y) = 1;
            else if (s == SemanticClass::other_element) other_bin(x, y) = 1;
        }
    }
    branch_bin = remove_small_regions(branch_bin, min_region_area);
    other_bin = remove_small_regions(other_bin, min_region_area);

    std::map<std::uint16_t, ObjectCloud> fruits;
    ObjectCloud branch{{}, CloudLabel::branch(), 0};
    ObjectCloud other{{}, CloudLabel::other(), 0};

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::uint16_t id = frame.fruit_mask(x, y);
            const std::uint16_t d = frame.depth(x, y);
            if (id != 0) {
                if (!fruit_keep(x, y)) continue; // dropped speck, not an obstacle either
                auto [it, inserted] = fruits.try_emplace(id, ObjectCloud{{}, CloudLabel::fruit(id), 0});
                if (d == 0) continue;
                it->second.points.push_back(backproject(x, y, d, frame.intrinsics));
                ++it->second.source_pixel_count;
            } else if (d != 0) {
                if (branch_bin(x, y)) {
                    branch.points.push_back(backproject(x, y, d, frame.intrinsics));
                    ++branch.source_pixel_count;
                } else if (other_bin(x, y)) {
                    other.points.push_back(backproject(x, y, d, frame.intrinsics));
                    ++other.source_pixel_count;
                }
            }
        }
    }

    std::vector<ObjectCloud> clouds;
    clouds.reserve(fruits.size() + 2);
    for (auto& [id, cloud] : fruits) clouds.push_back(std::move(cloud));
    clouds.push_back(std::move(branch));
    clouds.push_back(std::move(other));
    return clouds;
}

/// Distinct nonzero instance ids in the raw (uncleaned) fruit mask.
inline std::vector<std::uint16_t> raw_fruit_ids(const CameraFrame& frame) {
    std::map<std::uint16_t, bool> seen;
    for (int y = 0; y < frame.fruit_mask.height(); ++y)
        for (int x = 0; x < frame.fruit_mask.width(); ++x)
            if (frame.fruit_mask(x, y) != 0) seen[frame.fruit_mask(x, y)] = true;
    std::vector<std::uint16_t> ids;
    ids.reserve(seen.size());
    for (auto& [id, _] : seen) ids.push_back(id);
    return ids;
}

} // namespace orchard
