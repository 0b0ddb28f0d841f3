#pragma once

#include <array>
#include <span>
#include <vector>

#include "parsefit/bspline.hpp"
#include "parsefit/types.hpp"

namespace parsefit::postprocess {

/// Quad tessellation of a patch's UV sample grid. Closed directions wrap
/// (and contribute no boundary vertices).
struct QuadMesh {
    std::vector<Vec3> vertices;
    std::vector<Vec2> uvs;
    std::vector<std::array<int, 4>> quads;
    std::vector<char> boundary_mask;
    int nu = 0;
    int nv = 0;
    bool closed_u = false;
    bool closed_v = false;
};

QuadMesh tessellate(const bspline::BSplinePatch& patch, int nu = 40, int nv = 40);

/// One segment point matched to a surface sample, inheriting its uv.
struct UVMatch {
    Vec3 point;
    Vec2 uv;
    int sample_index = -1;
    int point_index = -1;
};

/// Minimum-cost assignment (squared L2) between surface samples and segment
/// points; produces min(samples, points) matches.
std::vector<UVMatch> match_uv(const std::vector<bspline::UVSample>& samples,
                              std::span<const Vec3> segment);

/// Samples the patch on a 40x40 UV grid and matches the segment against it.
/// `max_points > 0` caps the segment side of the assignment by deterministic
/// stride subsampling.
std::vector<UVMatch> match_uv_by_assignment(const bspline::BSplinePatch& patch,
                                            std::span<const Vec3> segment, int max_points = 0);

struct ArapResult {
    std::vector<Vec3> vertices;
    std::vector<double> energies;  // one per alternation, non-increasing
};

/// As-rigid-as-possible deformation with uniform edge weights on the
/// triangulated quad mesh. With soft_weight == 0 the pivot positions are
/// hard constraints; with soft_weight > 0 they become quadratic penalties
/// (used for fully closed patches, which have no boundary pivots).
ArapResult arap_deform(const QuadMesh& mesh, const std::vector<int>& pivots,
                       const std::vector<Vec3>& targets, int iterations = 10,
                       double soft_weight = 0.0);

bspline::BSplinePatch refit_from_matches(const std::vector<UVMatch>& matches, int rows, int cols,
                                         bool closed_u, bool closed_v);

struct FitToleranceConfig {
    double tolerance = 5e-4;
    int min_grid = 4;
    int max_grid = 160;
    int match_max_points = 0;
};

struct RefineResult {
    bspline::BSplinePatch patch;
    double chamfer = 0.0;
    bool success = false;
    std::vector<std::pair<int, int>> grids_visited;
};

/// Re-matches and refits the patch, doubling the control grid per direction
/// until the segment/patch Chamfer distance meets the tolerance, or halving
/// it while the tolerance still holds. Returns the last satisfying grid, or
/// the best effort with success = false.
RefineResult refine_to_tolerance(const bspline::BSplinePatch& patch, std::span<const Vec3> segment,
                                 const FitToleranceConfig& config = {});

/// Coverage pass: match, ARAP-deform toward the matched points (boundary
/// vertices as pivots; all matched vertices as weight-0.1 soft targets for
/// fully closed patches), re-match, and refit at the same grid size.
bspline::BSplinePatch optimize_coverage(const bspline::BSplinePatch& patch,
                                        std::span<const Vec3> segment, int arap_iterations = 10,
                                        int match_max_points = 0);

}  // namespace parsefit::postprocess
