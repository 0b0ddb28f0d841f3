#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "parsefit/clustering.hpp"
#include "parsefit/primitives.hpp"
#include "parsefit/types.hpp"

namespace parsefit::pipeline {

struct PipelineConfig {
    std::string embedding_source = "geometric";  // "geometric" | "file"
    std::string embedding_file;
    double scale_position = 1.0;
    double scale_normal = 1.0;
    int bandwidth_rank = 150;
    double bandwidth_floor = 1e-4;
    int mean_shift_iterations = 50;
    double mean_shift_tolerance = 1e-5;
    int min_segment_size = 20;
    int spline_grid = 20;
    double standardize_cd_threshold = 5e-3;
    bool refine = true;
    double refine_tolerance = 5e-4;
    int refine_min_grid = 4;
    int refine_max_grid = 160;
    int match_max_points = 1600;
    bool arap = false;
    int arap_iterations = 10;
    double classify_lambda = 1e-5;
    double closed_seam_fraction = 0.02;
    int cd_samples_per_shape = 10000;
    int spline_distance_samples = 2500;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Residual-based segment classification. With provided labels: majority
/// vote, ties broken by the fixed kind order. Without: every basic kind
/// plus an open B-spline is fit, scored by mean distance plus
/// lambda * parameter count, and a winning spline is re-tagged closed when
/// its u or v seam gap is small against the segment diagonal.
primitives::PrimitiveKind classify_segment(
    std::span<const Vec3> points, std::span<const Vec3> normals,
    const std::vector<primitives::PrimitiveKind>& provided_labels, const PipelineConfig& config);

struct PatchEntry {
    primitives::PrimitivePatch patch;
    std::vector<int> indices;  // rows of the input cloud
    primitives::PrimitiveKind kind = primitives::PrimitiveKind::plane;
};

struct SurfacePatchSet {
    std::vector<PatchEntry> patches;
    std::uint64_t seed = 0;
};

struct DecomposeResult {
    SurfacePatchSet patch_set;
    clustering::ClusterResult clusters;  // after the small-cluster merge
    Eigen::MatrixXd soft_membership;
    std::vector<std::pair<std::string, double>> timings_seconds;
    std::vector<std::string> warnings;
};

/// Full pipeline: embed, estimate bandwidth, mean-shift, extract clusters,
/// merge undersized clusters into their nearest larger one, classify and
/// fit each segment, optionally refine B-spline segments. Per-segment fit
/// failures downgrade the segment to its best basic primitive.
DecomposeResult decompose(const PointCloud& cloud, const PipelineConfig& config);

}  // namespace parsefit::pipeline
