#pragma once

#include "orchard/image.hpp"

#include <png.h>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace orchard {

namespace detail {

struct FileCloser {
    std::FILE* f = nullptr;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

[[noreturn]] inline void png_fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("png: " + what + ": " + path.string());
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

// Reads a single-channel grayscale PNG. Returns bit depth (8 or 16); pixel
// values are widened to uint16 without rescaling.
inline int read_png_gray(const std::filesystem::path& path, Image<std::uint16_t>& out) {
    FileCloser fc{std::fopen(path.string().c_str(), "rb")};
    if (!fc.f) png_fail(path, "cannot open");

    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) png_fail(path, "png_create_read_struct failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) png_fail(path, "png_create_info_struct failed");

    if (setjmp(png_jmpbuf(r.png))) png_fail(path, "decode error");

    png_init_io(r.png, fc.f);
    png_read_info(r.png, r.info);

    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16))
        png_fail(path, "expected 8- or 16-bit single-channel grayscale");
    if (depth == 16 && std::endian::native == std::endian::little)
        png_set_swap(r.png);
    png_read_update_info(r.png, r.info);

    out = Image<std::uint16_t>(static_cast<int>(w), static_cast<int>(h));
    if (depth == 16) {
        std::vector<png_bytep> rows(h);
        for (png_uint_32 y = 0; y < h; ++y)
            rows[y] = reinterpret_cast<png_bytep>(out.row(static_cast<int>(y)));
        png_read_image(r.png, rows.data());
    } else {
        std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h);
        std::vector<png_bytep> rows(h);
        for (png_uint_32 y = 0; y < h; ++y)
            rows[y] = buf.data() + static_cast<std::size_t>(y) * w;
        png_read_image(r.png, rows.data());
        for (png_uint_32 y = 0; y < h; ++y)
            for (png_uint_32 x = 0; x < w; ++x)
                out(static_cast<int>(x), static_cast<int>(y)) = buf[static_cast<std::size_t>(y) * w + x];
    }
    png_read_end(r.png, nullptr);
    return depth;
}

template <typename T>
inline void write_png_gray(const std::filesystem::path& path, const Image<T>& img, int depth) {
    FileCloser fc{std::fopen(path.string().c_str(), "wb")};
    if (!fc.f) png_fail(path, "cannot open for writing");

    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) png_fail(path, "png_create_write_struct failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) png_fail(path, "png_create_info_struct failed");

    if (setjmp(png_jmpbuf(w.png))) png_fail(path, "encode error");

    png_init_io(w.png, fc.f);
    png_set_IHDR(w.png, w.info, img.width(), img.height(), depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    if (depth == 16 && std::endian::native == std::endian::little)
        png_set_swap(w.png);

    std::vector<png_bytep> rows(img.height());
    for (int y = 0; y < img.height(); ++y)
        rows[y] = reinterpret_cast<png_bytep>(const_cast<T*>(img.row(y)));
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

} // namespace detail

/// Strict readers: the file must match the expected bit depth.
inline Image<std::uint16_t> read_png_gray16(const std::filesystem::path& path) {
    Image<std::uint16_t> img;
    if (detail::read_png_gray(path, img) != 16)
        detail::png_fail(path, "expected 16-bit grayscale");
    return img;
}

inline Image<std::uint8_t> read_png_gray8(const std::filesystem::path& path) {
    Image<std::uint16_t> wide;
    if (detail::read_png_gray(path, wide) != 8)
        detail::png_fail(path, "expected 8-bit grayscale");
    Image<std::uint8_t> img(wide.width(), wide.height());
    for (int y = 0; y < wide.height(); ++y)
        for (int x = 0; x < wide.width(); ++x)
            img(x, y) = static_cast<std::uint8_t>(wide(x, y));
    return img;
}

/// Accepts either bit depth; 8-bit values are widened, not rescaled.
inline Image<std::uint16_t> read_png_mask(const std::filesystem::path& path) {
    Image<std::uint16_t> img;
    detail::read_png_gray(path, img);
    return img;
}

inline void write_png_gray16(const std::filesystem::path& path, const Image<std::uint16_t>& img) {
    detail::write_png_gray(path, img, 16);
}

inline void write_png_gray8(const std::filesystem::path& path, const Image<std::uint8_t>& img) {
    detail::write_png_gray(path, img, 8);
}

} // namespace orchard
