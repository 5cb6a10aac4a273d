#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace orchard {

/// Dense row-major 2-D raster. Pixel (x, y) with x the column and y the row.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(checked_dim(width)), height_(checked_dim(height)),
          data_(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    T& operator()(int x, int y) { return data_[idx(x, y)]; }
    const T& operator()(int x, int y) const { return data_[idx(x, y)]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
    const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

    bool same_size(int w, int h) const { return width_ == w && height_ == h; }

    friend bool operator==(const Image& a, const Image& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
    }

private:
    static int checked_dim(int d) {
        if (d < 0) throw std::invalid_argument("Image: negative dimensions");
        return d;
    }

    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

} // namespace orchard
