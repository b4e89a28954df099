#include "triad/egroi.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "triad/error.hpp"
#include "triad/expert_metrics.hpp"

namespace triad::egroi {

using nlohmann::json;

double iou(const RoiBox& a, const RoiBox& b) {
    const int ix0 = std::max(a.x0, b.x0);
    const int iy0 = std::max(a.y0, b.y0);
    const int ix1 = std::min(a.x1, b.x1);
    const int iy1 = std::min(a.y1, b.y1);
    if (ix0 >= ix1 || iy0 >= iy1) return 0.0;
    const double inter = static_cast<double>(ix1 - ix0) * (iy1 - iy0);
    const double uni = static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter;
    return inter / uni;
}

ComponentSet extract_components(const BinaryMask& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw ArgumentError("connectivity must be 4 or 8");
    const int w = mask.width, h = mask.height;
    std::vector<std::int32_t> label(mask.bits.size(), -1);
    ComponentSet components;

    static constexpr int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static constexpr int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static constexpr int dx4[] = {0, -1, 1, 0};
    static constexpr int dy4[] = {-1, 0, 0, 1};
    const int* dx = connectivity == 8 ? dx8 : dx4;
    const int* dy = connectivity == 8 ? dy8 : dy4;
    const int ndirs = connectivity;

    std::vector<std::pair<int, int>> stack;
    // row-major scan keeps component order at (min y, min x) automatically
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!mask.bits[idx] || label[idx] >= 0) continue;
            const auto id = static_cast<std::int32_t>(components.size());
            Component comp;
            comp.min_x = comp.max_x = x;
            comp.min_y = comp.max_y = y;
            label[idx] = id;
            stack.assign(1, {x, y});
            double sum_x = 0.0, sum_y = 0.0;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                comp.pixels.emplace_back(cx, cy);
                sum_x += cx;
                sum_y += cy;
                comp.min_x = std::min(comp.min_x, cx);
                comp.max_x = std::max(comp.max_x, cx);
                comp.min_y = std::min(comp.min_y, cy);
                comp.max_y = std::max(comp.max_y, cy);
                for (int d = 0; d < ndirs; ++d) {
                    const int nx = cx + dx[d], ny = cy + dy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                    if (mask.bits[nidx] && label[nidx] < 0) {
                        label[nidx] = id;
                        stack.emplace_back(nx, ny);
                    }
                }
            }
            comp.centroid_x = sum_x / static_cast<double>(comp.pixels.size());
            comp.centroid_y = sum_y / static_cast<double>(comp.pixels.size());
            components.push_back(std::move(comp));
        }
    }
    std::sort(components.begin(), components.end(), [](const Component& a, const Component& b) {
        return std::tie(a.min_y, a.min_x) < std::tie(b.min_y, b.min_x);
    });
    return components;
}

namespace {

// Fixed-size box centered at (cx, cy), translated to stay inside the image.
RoiBox centered_box(double cx, double cy, int side, int image_w, int image_h) {
    int x0 = static_cast<int>(std::lround(cx)) - side / 2;
    int y0 = static_cast<int>(std::lround(cy)) - side / 2;
    x0 = std::clamp(x0, 0, image_w - side);
    y0 = std::clamp(y0, 0, image_h - side);
    RoiBox box;
    box.x0 = x0;
    box.y0 = y0;
    box.x1 = x0 + side;
    box.y1 = y0 + side;
    return box;
}

}  // namespace

std::vector<RoiBox> propose_boxes(const ComponentSet& components, const AnomalyMap& map,
                                  int box_side, const ImageMeta& image) {
    if (box_side < 1 || box_side > std::min(image.width, image.height))
        throw ArgumentError("box_side must lie in [1, min(image dims)]");
    std::vector<RoiBox> boxes;
    boxes.reserve(components.size());
    for (const auto& comp : components) {
        RoiBox box = centered_box(comp.centroid_x, comp.centroid_y, box_side, image.width,
                                  image.height);
        box.origin = BoxOrigin::expert;
        float peak = 0.0f;
        for (const auto& [x, y] : comp.pixels) peak = std::max(peak, map.at(x, y));
        box.peak_score = peak;
        boxes.push_back(box);
    }
    return boxes;
}

std::vector<RoiBox> merge_and_cap(std::vector<RoiBox> boxes, double iou_merge, int cap,
                                  int box_side, int image_w, int image_h) {
    if (iou_merge <= 0.0 || iou_merge > 1.0) throw ArgumentError("iou_merge must be in (0,1]");
    if (cap < 1) throw ArgumentError("cap must be >= 1");

    for (;;) {
        double best = 0.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < boxes.size(); ++i)
            for (std::size_t j = i + 1; j < boxes.size(); ++j) {
                const double v = iou(boxes[i], boxes[j]);
                if (v > best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        if (best < iou_merge) break;
        const RoiBox& a = boxes[bi];
        const RoiBox& b = boxes[bj];
        const double wa = static_cast<double>(a.area());
        const double wb = static_cast<double>(b.area());
        const double cx = (wa * (a.x0 + a.x1) / 2.0 + wb * (b.x0 + b.x1) / 2.0) / (wa + wb);
        const double cy = (wa * (a.y0 + a.y1) / 2.0 + wb * (b.y0 + b.y1) / 2.0) / (wa + wb);
        RoiBox merged = centered_box(cx, cy, box_side, image_w, image_h);
        merged.peak_score = std::max(a.peak_score, b.peak_score);
        merged.origin = a.peak_score >= b.peak_score ? a.origin : b.origin;
        boxes.erase(boxes.begin() + bj);
        boxes[bi] = merged;
    }

    std::sort(boxes.begin(), boxes.end(), [](const RoiBox& a, const RoiBox& b) {
        if (a.peak_score != b.peak_score) return a.peak_score > b.peak_score;
        return std::tie(a.y0, a.x0) < std::tie(b.y0, b.x0);
    });
    if (static_cast<int>(boxes.size()) > cap) boxes.resize(cap);
    return boxes;
}

std::vector<Raster> crop_patches(const Raster& image, std::span<const RoiBox> boxes) {
    std::vector<Raster> crops;
    crops.reserve(boxes.size());
    for (const auto& box : boxes) {
        if (box.x0 < 0 || box.y0 < 0 || box.x1 > image.width || box.y1 > image.height ||
            box.x0 >= box.x1 || box.y0 >= box.y1)
            throw ArgumentError("box out of image bounds");
        Raster crop;
        crop.width = box.width();
        crop.height = box.height();
        crop.pixels.resize(static_cast<std::size_t>(crop.width) * crop.height);
        for (int y = box.y0; y < box.y1; ++y)
            std::copy_n(image.pixels.data() + static_cast<std::size_t>(y) * image.width + box.x0,
                        crop.width,
                        crop.pixels.data() + static_cast<std::size_t>(y - box.y0) * crop.width);
        crops.push_back(std::move(crop));
    }
    return crops;
}

void token_layout(RoiManifest& manifest, int base_grid_w, int base_grid_h, int n_patches,
                  int patch_grid_w, int patch_grid_h, int pool, int budget) {
    if (n_patches < 0 || n_patches > 4) throw ArgumentError("n_patches must be in [0,4]");
    if (pool < 1 || patch_grid_w % pool != 0 || patch_grid_h % pool != 0)
        throw ArgumentError("pool must divide both patch grid dimensions");
    manifest.grid_w = base_grid_w;
    manifest.grid_h = base_grid_h;
    manifest.patch_tokens_each = (patch_grid_w / pool) * (patch_grid_h / pool);
    manifest.total_visual_tokens =
        base_grid_w * base_grid_h + n_patches * manifest.patch_tokens_each;
    if (manifest.total_visual_tokens > budget)
        throw BudgetError("visual token total " + std::to_string(manifest.total_visual_tokens) +
                          " exceeds budget " + std::to_string(budget) + " by " +
                          std::to_string(manifest.total_visual_tokens - budget));
}

AnomalyMap resample_nearest(const AnomalyMap& map, int width, int height) {
    if (map.width == width && map.height == height) return map;
    AnomalyMap out;
    out.width = width;
    out.height = height;
    out.normalized = map.normalized;
    out.source_expert = map.source_expert;
    out.scores.resize(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(map.height - 1, y * map.height / height);
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(map.width - 1, x * map.width / width);
            out.scores[static_cast<std::size_t>(y) * width + x] = map.at(sx, sy);
        }
    }
    return out;
}

namespace {

EgroiResult finish_pipeline(const ImageMeta& image, const Raster& pixels,
                            std::vector<RoiBox> boxes, const EgroiConfig& cfg,
                            const std::string& sample_id) {
    boxes = merge_and_cap(std::move(boxes), cfg.iou_merge, cfg.cap, cfg.box_side, image.width,
                          image.height);
    EgroiResult result;
    result.manifest.sample_id = sample_id;
    result.manifest.boxes = boxes;
    result.patches = crop_patches(pixels, boxes);
    token_layout(result.manifest, cfg.base_grid_w, cfg.base_grid_h,
                 static_cast<int>(boxes.size()), cfg.patch_grid_w, cfg.patch_grid_h, cfg.pool,
                 cfg.budget);
    return result;
}

}  // namespace

EgroiResult run_egroi(const ImageMeta& image, const Raster& pixels, const AnomalyMap& raw_map,
                      const EgroiConfig& config) {
    if (pixels.width != image.width || pixels.height != image.height)
        throw ArgumentError("raster dimensions disagree with image meta");
    AnomalyMap map = resample_nearest(raw_map, image.width, image.height);
    map = metrics::normalize_map(map);
    const BinaryMask mask = metrics::binarize(map, config.threshold);
    const ComponentSet components = extract_components(mask, config.connectivity);
    std::vector<RoiBox> boxes = propose_boxes(components, map, config.box_side, image);
    return finish_pipeline(image, pixels, std::move(boxes), config, image.sample_id);
}

EgroiResult run_egroi_training(const ImageMeta& image, const Raster& pixels, const BinaryMask& gt,
                               const EgroiConfig& config) {
    if (gt.width != image.width || gt.height != image.height)
        throw ArgumentError("ground-truth mask dimensions disagree with image meta");
    const ComponentSet components = extract_components(gt, config.connectivity);
    AnomalyMap unit;  // GT pixels carry no scores; peak is 1 by definition
    unit.width = gt.width;
    unit.height = gt.height;
    unit.normalized = true;
    unit.scores.assign(gt.bits.size(), 1.0f);
    std::vector<RoiBox> boxes = propose_boxes(components, unit, config.box_side, image);
    for (auto& b : boxes) b.origin = BoxOrigin::ground_truth;

    std::mt19937_64 rng(config.seed);
    const int n_random = 1 + static_cast<int>(rng() % 2);
    std::uniform_int_distribution<int> dist_x(0, image.width - config.box_side);
    std::uniform_int_distribution<int> dist_y(0, image.height - config.box_side);
    for (int n = 0; n < n_random; ++n) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            RoiBox cand;
            cand.x0 = dist_x(rng);
            cand.y0 = dist_y(rng);
            cand.x1 = cand.x0 + config.box_side;
            cand.y1 = cand.y0 + config.box_side;
            cand.origin = BoxOrigin::random_normal;
            cand.peak_score = 0.0f;
            const bool clear = std::all_of(boxes.begin(), boxes.end(), [&](const RoiBox& b) {
                return b.origin != BoxOrigin::ground_truth || iou(cand, b) < 0.1;
            });
            if (clear) {
                boxes.push_back(cand);
                break;
            }
        }
    }
    return finish_pipeline(image, pixels, std::move(boxes), config, image.sample_id);
}

namespace {

const char* origin_name(BoxOrigin o) {
    switch (o) {
        case BoxOrigin::expert: return "expert";
        case BoxOrigin::ground_truth: return "ground_truth";
        default: return "random_normal";
    }
}

BoxOrigin origin_from(const std::string& s) {
    if (s == "expert") return BoxOrigin::expert;
    if (s == "ground_truth") return BoxOrigin::ground_truth;
    if (s == "random_normal") return BoxOrigin::random_normal;
    throw FormatError("unknown box origin: " + s);
}

}  // namespace

json RoiManifest::to_json() const {
    json jboxes = json::array();
    for (const auto& b : boxes)
        jboxes.push_back({{"x0", b.x0},
                          {"y0", b.y0},
                          {"x1", b.x1},
                          {"y1", b.y1},
                          {"peak_score", b.peak_score},
                          {"origin", origin_name(b.origin)}});
    return {{"sample_id", sample_id},
            {"boxes", jboxes},
            {"base_view", {{"grid_w", grid_w}, {"grid_h", grid_h}}},
            {"patch_tokens_each", patch_tokens_each},
            {"total_visual_tokens", total_visual_tokens}};
}

RoiManifest RoiManifest::from_json(const json& j) {
    RoiManifest m;
    m.sample_id = j.at("sample_id").get<std::string>();
    for (const auto& jb : j.at("boxes")) {
        RoiBox b;
        b.x0 = jb.at("x0").get<int>();
        b.y0 = jb.at("y0").get<int>();
        b.x1 = jb.at("x1").get<int>();
        b.y1 = jb.at("y1").get<int>();
        b.peak_score = jb.at("peak_score").get<float>();
        b.origin = origin_from(jb.at("origin").get<std::string>());
        m.boxes.push_back(b);
    }
    m.grid_w = j.at("base_view").at("grid_w").get<int>();
    m.grid_h = j.at("base_view").at("grid_h").get<int>();
    m.patch_tokens_each = j.at("patch_tokens_each").get<int>();
    m.total_visual_tokens = j.at("total_visual_tokens").get<int>();
    return m;
}

}  // namespace triad::egroi
