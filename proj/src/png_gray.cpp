#include "png_gray.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>

#include "triad/error.hpp"

namespace triad::detail {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) throw IoError("libpng allocation failed");
    }
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) throw IoError("libpng allocation failed");
    }
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

void read_header_checked(PngReader& r, std::FILE* f, const std::filesystem::path& path,
                         int expected_depth, png_uint_32& w, png_uint_32& h) {
    if (setjmp(png_jmpbuf(r.png)))
        throw FormatError("malformed PNG: " + path.string());
    png_init_io(r.png, f);
    png_read_info(r.png, r.info);
    int depth = 0, color = 0;
    png_get_IHDR(r.png, r.info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw FormatError("expected grayscale PNG, got color type " + std::to_string(color) +
                          ": " + path.string());
    if (depth != expected_depth)
        throw FormatError("expected " + std::to_string(expected_depth) + "-bit grayscale, got " +
                          std::to_string(depth) + "-bit: " + path.string());
}

}  // namespace

Gray16Image read_png_gray16(const std::filesystem::path& path) {
    auto f = open_file(path, "rb");
    PngReader r;
    png_uint_32 w = 0, h = 0;
    read_header_checked(r, f.get(), path, 16, w, h);
    if (setjmp(png_jmpbuf(r.png)))
        throw FormatError("malformed PNG: " + path.string());
    png_set_swap(r.png);  // PNG stores 16-bit big-endian
    Gray16Image img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.pixels.resize(static_cast<std::size_t>(w) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(y) * w);
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return img;
}

Gray8Image read_png_gray8(const std::filesystem::path& path) {
    auto f = open_file(path, "rb");
    PngReader r;
    png_uint_32 w = 0, h = 0;
    read_header_checked(r, f.get(), path, 8, w, h);
    if (setjmp(png_jmpbuf(r.png)))
        throw FormatError("malformed PNG: " + path.string());
    Gray8Image img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.pixels.resize(static_cast<std::size_t>(w) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * w;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return img;
}

void write_png_gray16(const Gray16Image& img, const std::filesystem::path& path) {
    auto f = open_file(path, "wb");
    PngWriter wr;
    if (setjmp(png_jmpbuf(wr.png)))
        throw IoError("PNG write failed: " + path.string());
    png_init_io(wr.png, f.get());
    png_set_IHDR(wr.png, wr.info, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(wr.png, wr.info);
    png_set_swap(wr.png);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(
            const_cast<std::uint16_t*>(img.pixels.data() + static_cast<std::size_t>(y) * img.width));
    png_write_image(wr.png, rows.data());
    png_write_end(wr.png, nullptr);
}

void write_png_gray8(const Gray8Image& img, const std::filesystem::path& path) {
    auto f = open_file(path, "wb");
    PngWriter wr;
    if (setjmp(png_jmpbuf(wr.png)))
        throw IoError("PNG write failed: " + path.string());
    png_init_io(wr.png, f.get());
    png_set_IHDR(wr.png, wr.info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(wr.png, wr.info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<std::uint8_t*>(img.pixels.data() +
                                            static_cast<std::size_t>(y) * img.width);
    png_write_image(wr.png, rows.data());
    png_write_end(wr.png, nullptr);
}

}  // namespace triad::detail
