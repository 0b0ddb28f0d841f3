#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "parsefit/primitives.hpp"
#include "parsefit/types.hpp"

namespace parsefit::metrics {

/// Hard point-to-segment memberships plus a per-segment type tag.
/// A label of -1 marks a point outside every (predicted) segment.
struct SegmentLabeling {
    std::vector<int> labels;                       // per point, in [-1, segment_count)
    int segment_count = 0;
    std::vector<primitives::PrimitiveKind> types;  // one per segment

    static SegmentLabeling from_labels(std::vector<int> labels,
                                       std::vector<primitives::PrimitiveKind> types = {});
};

/// Pairs (predicted segment, ground-truth segment) maximizing summed IOU
/// (Hungarian on cost 1 - IOU).
std::vector<std::pair<int, int>> match_segments(const SegmentLabeling& predicted,
                                                const SegmentLabeling& truth);

/// Mean IOU over ground-truth segments; unmatched ground-truth segments
/// contribute zero.
double seg_miou(const SegmentLabeling& predicted, const SegmentLabeling& truth);

/// Fraction of matched ground-truth segments whose predicted type agrees,
/// averaged over all ground-truth segments.
double label_miou(const SegmentLabeling& predicted, const SegmentLabeling& truth);

/// Mean over matched pairs of the mean (unsquared) distance from the
/// ground-truth segment's samples to the matched predicted patch.
double residual_error(const std::vector<primitives::PrimitivePatch>& predicted_patches,
                      const std::vector<std::vector<Vec3>>& truth_segment_samples,
                      const std::vector<std::pair<int, int>>& matched_pairs,
                      int spline_samples = 2000);

/// Fraction of input points within epsilon of the nearest predicted patch.
double p_coverage(const std::vector<Vec3>& input_points,
                  const std::vector<primitives::PrimitivePatch>& patches, double epsilon = 0.01,
                  int spline_samples = 2000);

struct ChamferResult {
    double p_cover = 0.0;  // mean over reconstructed of min squared distance to input
    double s_cover = 0.0;  // mean over input of min squared distance to reconstructed
    double chamfer = 0.0;  // mean of the two
};

ChamferResult chamfer_distance(const std::vector<Vec3>& reconstructed,
                               const std::vector<Vec3>& input);

/// Random per-patch surface samples (counts proportional to segment size,
/// `total_samples` overall), trimmed to within `trim_epsilon` of the
/// segment that produced each patch.
std::vector<Vec3> reconstruct_samples(const std::vector<primitives::PrimitivePatch>& patches,
                                      const std::vector<std::vector<Vec3>>& segments,
                                      int total_samples, double trim_epsilon, std::uint64_t seed);

struct MetricsReport {
    double seg_miou = 0.0;
    double label_miou = 0.0;
    double residual = 0.0;
    double p_coverage = 0.0;
    double p_cover = 0.0;
    double s_cover = 0.0;
    double chamfer = 0.0;
    std::vector<std::pair<int, int>> matched_pairs;
};

}  // namespace parsefit::metrics
