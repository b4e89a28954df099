#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triad/types.hpp"

#include <nlohmann/json.hpp>

namespace triad::egroi {

enum class BoxOrigin { expert, ground_truth, random_normal };

/// Half-open pixel box [x0,x1) x [y0,y1).
struct RoiBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    float peak_score = 0.0f;
    BoxOrigin origin = BoxOrigin::expert;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    std::int64_t area() const { return static_cast<std::int64_t>(width()) * height(); }
};

double iou(const RoiBox& a, const RoiBox& b);

struct Component {
    std::vector<std::pair<int, int>> pixels;  // (x, y)
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;  // inclusive bounding rect
    double centroid_x = 0.0, centroid_y = 0.0;
    float peak_score = 0.0f;  // filled by propose_boxes from the map
};

using ComponentSet = std::vector<Component>;

struct RoiManifest {
    std::string sample_id;
    std::vector<RoiBox> boxes;  // <= cap
    int grid_w = 0, grid_h = 0;  // base-view token grid
    int patch_tokens_each = 0;
    int total_visual_tokens = 0;

    nlohmann::json to_json() const;
    static RoiManifest from_json(const nlohmann::json& j);
};

struct EgroiConfig {
    double threshold = 0.9;
    int box_side = 336;
    double iou_merge = 0.5;
    int cap = 4;
    int base_grid_w = 24, base_grid_h = 24;
    int patch_grid_w = 24, patch_grid_h = 24;
    int pool = 2;
    int budget = 32768;
    int connectivity = 8;
    std::uint64_t seed = 0;
};

/// Deterministic labeling; components ordered by (min y, min x).
ComponentSet extract_components(const BinaryMask& mask, int connectivity);

/// One fixed-size box per component, centered on its centroid and translated
/// (never shrunk) to lie inside the image.
std::vector<RoiBox> propose_boxes(const ComponentSet& components, const AnomalyMap& map,
                                  int box_side, const ImageMeta& image);

/// Greedy highest-IoU merging into re-centered fixed-size boxes, then keep the
/// `cap` highest-peak boxes. Output pairwise IoU < iou_merge.
std::vector<RoiBox> merge_and_cap(std::vector<RoiBox> boxes, double iou_merge, int cap,
                                  int box_side, int image_w, int image_h);

std::vector<Raster> crop_patches(const Raster& image, std::span<const RoiBox> boxes);

/// Token accounting for base view + pooled patches; throws BudgetError when
/// the total exceeds the context budget.
void token_layout(RoiManifest& manifest, int base_grid_w, int base_grid_h, int n_patches,
                  int patch_grid_w, int patch_grid_h, int pool, int budget);

struct EgroiResult {
    RoiManifest manifest;
    std::vector<Raster> patches;
};

/// Full inference-mode pipeline: normalize -> binarize -> components ->
/// boxes -> merge/cap -> crops -> token layout. The raw map is resampled
/// (nearest neighbor) to the image size when dimensions differ.
EgroiResult run_egroi(const ImageMeta& image, const Raster& pixels, const AnomalyMap& raw_map,
                      const EgroiConfig& config);

/// Training-mode boxes: ground-truth components plus 1-2 seeded random normal
/// boxes rejection-sampled to IoU < 0.1 against the GT boxes.
EgroiResult run_egroi_training(const ImageMeta& image, const Raster& pixels, const BinaryMask& gt,
                               const EgroiConfig& config);

AnomalyMap resample_nearest(const AnomalyMap& map, int width, int height);

}  // namespace triad::egroi
