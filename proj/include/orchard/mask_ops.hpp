#pragma once

#include "orchard/image.hpp"

#include <cstdint>
#include <vector>

namespace orchard {

struct ComponentLabels {
    Image<std::int32_t> labels; // 0 = background, components numbered from 1
    std::vector<std::int64_t> areas; // areas[c-1] = pixel count of component c
    int count = 0;
};

/// 8-connected components of equal nonzero value. Pixels belong to the same
/// component only if they carry the same label value, so touching instances
/// with distinct ids stay separate.
template <typename T>
ComponentLabels label_components(const Image<T>& img) {
    const int w = img.width();
    const int h = img.height();
    ComponentLabels out;
    out.labels = Image<std::int32_t>(w, h, 0);

    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (img(x, y) == T{} || out.labels(x, y) != 0) continue;
            const T value = img(x, y);
            const std::int32_t comp = ++out.count;
            std::int64_t area = 0;
            stack.clear();
            stack.emplace_back(x, y);
            out.labels(x, y) = comp;
            while (!stack.empty()) {
                auto [px, py] = stack.back();
                stack.pop_back();
                ++area;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = px + dx;
                        const int ny = py + dy;
                        if (!img.in_bounds(nx, ny)) continue;
                        if (img(nx, ny) != value || out.labels(nx, ny) != 0) continue;
                        out.labels(nx, ny) = comp;
                        stack.emplace_back(nx, ny);
                    }
                }
            }
            out.areas.push_back(area);
        }
    }
    return out;
}

/// Clears every 8-connected component with area < min_area; larger components
/// are preserved bit-exactly. Idempotent.
inline Image<std::uint8_t> remove_small_regions(const Image<std::uint8_t>& mask,
                                                std::int64_t min_area) {
    ComponentLabels cl = label_components(mask);
    Image<std::uint8_t> out(mask.width(), mask.height(), 0);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const std::int32_t c = cl.labels(x, y);
            if (c != 0 && cl.areas[static_cast<std::size_t>(c) - 1] >= min_area)
                out(x, y) = mask(x, y);
        }
    }
    return out;
}

/// Marks pixels whose same-valued component has area >= min_area. Used to
/// clean instance and semantic masks in one labeling pass.
template <typename T>
Image<std::uint8_t> keep_large_components(const Image<T>& img, std::int64_t min_area) {
    ComponentLabels cl = label_components(img);
    Image<std::uint8_t> keep(img.width(), img.height(), 0);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const std::int32_t c = cl.labels(x, y);
            if (c != 0 && cl.areas[static_cast<std::size_t>(c) - 1] >= min_area) keep(x, y) = 1;
        }
    }
    return keep;
}

} // namespace orchard
