#pragma once

#include "orchard/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <functional>

namespace orchard {

/// Signed integer voxel address in a grid anchored at the origin.
struct VoxelKey {
    std::int32_t i = 0;
    std::int32_t j = 0;
    std::int32_t k = 0;

    friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
};

inline VoxelKey key_of(const Point3& p, double resolution) {
    return VoxelKey{static_cast<std::int32_t>(std::floor(p.x() / resolution)),
                    static_cast<std::int32_t>(std::floor(p.y() / resolution)),
                    static_cast<std::int32_t>(std::floor(p.z() / resolution))};
}

inline Point3 center_of(const VoxelKey& k, double resolution) {
    return Point3{(k.i + 0.5) * resolution, (k.j + 0.5) * resolution, (k.k + 0.5) * resolution};
}

namespace detail {
// Spreads the low 21 bits of v so that each lands every third position.
inline std::uint64_t spread3(std::uint64_t v) {
    v &= 0x1fffff;
    v = (v | (v << 32)) & 0x1f00000000ffffULL;
    v = (v | (v << 16)) & 0x1f0000ff0000ffULL;
    v = (v | (v << 8)) & 0x100f00f00f00f00fULL;
    v = (v | (v << 4)) & 0x10c30c30c30c30c3ULL;
    v = (v | (v << 2)) & 0x1249249249249249ULL;
    return v;
}
} // namespace detail

/// Morton (Z-order) code; the canonical ordering of voxel keys. Axes are
/// biased by 2^20, so coordinates must stay within [-2^20, 2^20).
inline std::uint64_t morton_code(const VoxelKey& k) {
    const std::uint64_t bias = 1u << 20;
    return detail::spread3(static_cast<std::uint32_t>(k.i) + bias) |
           (detail::spread3(static_cast<std::uint32_t>(k.j) + bias) << 1) |
           (detail::spread3(static_cast<std::uint32_t>(k.k) + bias) << 2);
}

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (std::uint64_t v : {static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.i)),
                                static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.j)),
                                static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.k))}) {
            h ^= v;
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

} // namespace orchard
