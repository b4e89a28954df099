#pragma once

#include <span>
#include <utility>
#include <vector>

#include "triad/types.hpp"

namespace triad::metrics {

struct PixelRates {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double tpr = 0.0;  // tp/(tp+fn), 0 when no positives
    double fpr = 0.0;  // fp/(fp+tn), 0 when no negatives
};

enum class SizeClassValue { small, medium, large };

struct SizeClass {
    SizeClassValue value;
    double area_ratio;  // defect pixels / total pixels
};

enum class ImageDecision { defect, normal };

/// Per-map min-max scaling to [0,1]; a constant map becomes all zeros.
AnomalyMap normalize_map(const AnomalyMap& map);

/// t in (0,1]: mark pixels with score > t.
/// t in [-1,0): mark the lowest |t|-rank-quantile of the map's scores, ties
/// at the cutoff value included.
BinaryMask binarize(const AnomalyMap& map, double threshold);

PixelRates pixel_rates(const BinaryMask& pred, const BinaryMask& gt);

/// AUROC over all pixels pooled across the set, rank statistic with ties at 1/2.
double pixel_auroc(std::span<const std::pair<AnomalyMap, BinaryMask>> maps_with_masks);

/// Image-level call: defect iff the map's max score, normalized by the
/// evaluation set's global [min,max], exceeds the threshold.
ImageDecision image_decision(const AnomalyMap& map, double global_min, double global_max,
                             double threshold);

/// small < 0.01 <= medium <= 0.1 < large, by defect-area fraction.
SizeClass defect_size_class(const BinaryMask& gt);

// Serial reference implementations, kept as oracles for the parallel kernels
// above (see tests/ and bench/).
namespace serial {
AnomalyMap normalize_map(const AnomalyMap& map);
BinaryMask binarize_positive(const AnomalyMap& map, double threshold);
PixelRates pixel_rates(const BinaryMask& pred, const BinaryMask& gt);
/// Brute-force mean over all positive-negative pairs of [pos > neg] + 1/2[tie].
double pixel_auroc_pairwise(std::span<const std::pair<AnomalyMap, BinaryMask>> maps_with_masks);
}  // namespace serial

}  // namespace triad::metrics
