#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace triad {

enum class Label { normal, abnormal };

/// Per-pixel real-valued anomaly scores, row-major.
struct AnomalyMap {
    int width = 0;
    int height = 0;
    std::vector<float> scores;  // size == width*height
    bool normalized = false;    // true => every score in [0,1]
    std::string source_expert;

    std::size_t size() const { return scores.size(); }
    float at(int x, int y) const { return scores[static_cast<std::size_t>(y) * width + x]; }
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 0/1, row-major

    std::size_t size() const { return bits.size(); }
    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    std::size_t count_true() const {
        std::size_t n = 0;
        for (auto b : bits) n += b != 0;
        return n;
    }
};

struct ImageMeta {
    int width = 0;
    int height = 0;
    std::string product_class;
    std::string sample_id;
    Label label = Label::normal;
};

/// 8-bit grayscale raster, row-major.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline const char* to_string(Label l) { return l == Label::normal ? "normal" : "abnormal"; }

}  // namespace triad
