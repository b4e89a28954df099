#pragma once

// Thin libpng wrapper for grayscale-only reads/writes. Anything that is not
// plain grayscale at the expected bit depth is a format error.

#include <cstdint>
#include <filesystem>
#include <vector>

namespace triad::detail {

struct Gray16Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> pixels;
};

struct Gray8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

Gray16Image read_png_gray16(const std::filesystem::path& path);
Gray8Image read_png_gray8(const std::filesystem::path& path);
void write_png_gray16(const Gray16Image& img, const std::filesystem::path& path);
void write_png_gray8(const Gray8Image& img, const std::filesystem::path& path);

}  // namespace triad::detail
