#include "triad/expert_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "triad/error.hpp"

namespace triad::metrics {

namespace {

void require_same_dims(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw ArgumentError("mask dimension mismatch: " + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height));
}

void finalize_rates(PixelRates& r) {
    r.tpr = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.fpr = (r.fp + r.tn) > 0 ? static_cast<double>(r.fp) / static_cast<double>(r.fp + r.tn) : 0.0;
}

}  // namespace

AnomalyMap normalize_map(const AnomalyMap& map) {
    if (map.scores.empty()) throw ArgumentError("empty anomaly map");
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    const std::int64_t n = static_cast<std::int64_t>(map.scores.size());
#pragma omp parallel for reduction(min : lo) reduction(max : hi)
    for (std::int64_t i = 0; i < n; ++i) {
        lo = std::min(lo, map.scores[i]);
        hi = std::max(hi, map.scores[i]);
    }
    AnomalyMap out = map;
    out.normalized = true;
    if (hi <= lo) {
        // constant map: no region stands out, propose nothing
        std::fill(out.scores.begin(), out.scores.end(), 0.0f);
        return out;
    }
    const float range = hi - lo;  // divide, not multiply by reciprocal: keeps max at exactly 1
#pragma omp parallel for
    for (std::int64_t i = 0; i < n; ++i) out.scores[i] = (map.scores[i] - lo) / range;
    return out;
}

BinaryMask binarize(const AnomalyMap& map, double threshold) {
    if (!map.normalized) throw ArgumentError("binarize requires a normalized map");
    if (threshold == 0.0 || std::abs(threshold) > 1.0)
        throw ArgumentError("threshold must lie in [-1,1] excluding 0, got " +
                            std::to_string(threshold));
    BinaryMask out;
    out.width = map.width;
    out.height = map.height;
    out.bits.resize(map.scores.size());
    const std::int64_t n = static_cast<std::int64_t>(map.scores.size());
    if (threshold > 0.0) {
        const float t = static_cast<float>(threshold);
#pragma omp parallel for
        for (std::int64_t i = 0; i < n; ++i) out.bits[i] = map.scores[i] > t;
        return out;
    }
    // lowest-|t| quantile by rank; every pixel tied with the cutoff value is marked
    const auto k = static_cast<std::size_t>(std::floor(-threshold * static_cast<double>(n) + 1e-9));
    if (k == 0) return out;
    std::vector<float> sorted(map.scores);
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    const float cutoff = sorted[k - 1];
#pragma omp parallel for
    for (std::int64_t i = 0; i < n; ++i) out.bits[i] = map.scores[i] <= cutoff;
    return out;
}

PixelRates pixel_rates(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_dims(pred, gt);
    PixelRates r;
    const std::int64_t n = static_cast<std::int64_t>(pred.bits.size());
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
#pragma omp parallel for reduction(+ : tp, fp, tn, fn)
    for (std::int64_t i = 0; i < n; ++i) {
        const bool p = pred.bits[i] != 0;
        const bool g = gt.bits[i] != 0;
        tp += p && g;
        fp += p && !g;
        tn += !p && !g;
        fn += !p && g;
    }
    r.tp = tp;
    r.fp = fp;
    r.tn = tn;
    r.fn = fn;
    finalize_rates(r);
    return r;
}

double pixel_auroc(std::span<const std::pair<AnomalyMap, BinaryMask>> maps_with_masks) {
    std::vector<std::pair<float, bool>> pooled;  // (score, is_positive)
    for (const auto& [map, mask] : maps_with_masks) {
        if (map.width != mask.width || map.height != mask.height)
            throw ArgumentError("map/mask dimension mismatch in pixel_auroc");
        pooled.reserve(pooled.size() + map.scores.size());
        for (std::size_t i = 0; i < map.scores.size(); ++i)
            pooled.emplace_back(map.scores[i], mask.bits[i] != 0);
    }
    std::uint64_t pos = 0;
    for (const auto& [s, p] : pooled) pos += p;
    const std::uint64_t neg = pooled.size() - pos;
    if (pos == 0 || neg == 0)
        throw ArgumentError("pixel_auroc undefined: ground truth is single-class");

    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // midrank sum over positives
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].second) rank_sum += midrank;
        i = j;
    }
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

ImageDecision image_decision(const AnomalyMap& map, double global_min, double global_max,
                             double threshold) {
    if (global_min >= global_max) throw ArgumentError("global_min must be < global_max");
    if (map.scores.empty()) throw ArgumentError("empty anomaly map");
    const double peak = *std::max_element(map.scores.begin(), map.scores.end());
    const double scaled = (peak - global_min) / (global_max - global_min);
    return scaled > threshold ? ImageDecision::defect : ImageDecision::normal;
}

SizeClass defect_size_class(const BinaryMask& gt) {
    if (gt.bits.empty()) throw ArgumentError("empty mask");
    const std::size_t positives = gt.count_true();
    if (positives == 0)
        throw ArgumentError("defect_size_class undefined on an all-false mask (normal sample)");
    const double ratio = static_cast<double>(positives) / static_cast<double>(gt.bits.size());
    SizeClassValue v;
    if (ratio < 0.01)
        v = SizeClassValue::small;
    else if (ratio <= 0.1)
        v = SizeClassValue::medium;
    else
        v = SizeClassValue::large;
    return {v, ratio};
}

namespace serial {

AnomalyMap normalize_map(const AnomalyMap& map) {
    if (map.scores.empty()) throw ArgumentError("empty anomaly map");
    const auto [lo_it, hi_it] = std::minmax_element(map.scores.begin(), map.scores.end());
    AnomalyMap out = map;
    out.normalized = true;
    if (*hi_it <= *lo_it) {
        std::fill(out.scores.begin(), out.scores.end(), 0.0f);
        return out;
    }
    const float lo = *lo_it, range = *hi_it - *lo_it;
    for (auto& s : out.scores) s = (s - lo) / range;
    return out;
}

BinaryMask binarize_positive(const AnomalyMap& map, double threshold) {
    BinaryMask out;
    out.width = map.width;
    out.height = map.height;
    out.bits.resize(map.scores.size());
    for (std::size_t i = 0; i < map.scores.size(); ++i)
        out.bits[i] = map.scores[i] > static_cast<float>(threshold);
    return out;
}

PixelRates pixel_rates(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_dims(pred, gt);
    PixelRates r;
    for (std::size_t i = 0; i < pred.bits.size(); ++i) {
        const bool p = pred.bits[i] != 0;
        const bool g = gt.bits[i] != 0;
        if (p && g)
            ++r.tp;
        else if (p)
            ++r.fp;
        else if (g)
            ++r.fn;
        else
            ++r.tn;
    }
    finalize_rates(r);
    return r;
}

double pixel_auroc_pairwise(std::span<const std::pair<AnomalyMap, BinaryMask>> maps_with_masks) {
    std::vector<float> pos, neg;
    for (const auto& [map, mask] : maps_with_masks)
        for (std::size_t i = 0; i < map.scores.size(); ++i)
            (mask.bits[i] ? pos : neg).push_back(map.scores[i]);
    if (pos.empty() || neg.empty())
        throw ArgumentError("pixel_auroc undefined: ground truth is single-class");
    double wins = 0.0;
    for (float sp : pos)
        for (float sn : neg) {
            if (sp > sn)
                wins += 1.0;
            else if (sp == sn)
                wins += 0.5;
        }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

}  // namespace serial

}  // namespace triad::metrics
