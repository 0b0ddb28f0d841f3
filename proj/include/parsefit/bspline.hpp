#pragma once

#include <vector>

#include "parsefit/types.hpp"

namespace parsefit::bspline {

inline constexpr int kDegree = 3;

/// Non-decreasing parameter sequence on [0,1]. Open directions use clamped
/// uniform knots (end knots repeated degree+1 times, uniform interior);
/// closed directions use the uniform span boundaries i/count.
struct KnotVector {
    std::vector<double> values;

    static KnotVector clamped_uniform(int control_count);
    static KnotVector periodic_uniform(int control_count);

    bool valid_open(int control_count) const;
    bool valid_closed(int control_count) const;
};

/// P x Q lattice of 3D control points, row-major. A closed direction wraps
/// its control indices during evaluation.
struct ControlGrid {
    int rows = 0;
    int cols = 0;
    bool closed_u = false;
    bool closed_v = false;
    std::vector<Vec3> points;

    ControlGrid() = default;
    ControlGrid(int r, int c, bool cu = false, bool cv = false)
        : rows(r), cols(c), closed_u(cu), closed_v(cv),
          points(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), Vec3::Zero()) {}

    Vec3& at(int p, int q) { return points[static_cast<std::size_t>(p) * cols + q]; }
    const Vec3& at(int p, int q) const { return points[static_cast<std::size_t>(p) * cols + q]; }
};

/// Cubic tensor-product B-spline patch over [0,1]^2.
struct BSplinePatch {
    ControlGrid grid;
    KnotVector knots_u;
    KnotVector knots_v;
};

/// Surface sample tagged with the parameter it was evaluated at.
struct UVSample {
    Vec2 uv;
    Vec3 position;
};

/// Builds the patch for a control grid, deriving knot vectors from the grid
/// size and closed flags.
BSplinePatch make_patch(ControlGrid grid);

/// All `count` cubic basis values at u for an open clamped direction.
/// Nonnegative, at most 4 nonzero, sums to 1.
std::vector<double> basis_functions(double u, const KnotVector& knots, int count);

Vec3 evaluate(const BSplinePatch& patch, double u, double v);

/// Uniform nu x nv parameter grid; closed directions omit the duplicate
/// seam sample. Samples are ordered u-major: index = iu*nv + iv.
std::vector<UVSample> sample_uniform(const BSplinePatch& patch, int nu, int nv);

/// Linear least squares for the control grid minimizing
/// sum ||s(uv_i) - position_i||^2. Normal equations with an SPD
/// factorization and a conditioning check; falls back to a rank-revealing
/// QR, and throws FitError when the system is rank deficient or
/// underdetermined. A solution whose control bounding box exceeds
/// max_extent_factor times the data bounding box is rejected as
/// ill-conditioned (pass 0 to disable, for callers that validate the fit
/// by a measured Chamfer distance instead).
ControlGrid fit_control_grid(const std::vector<UVSample>& samples, int rows, int cols,
                             bool closed_u, bool closed_v, double max_extent_factor = 10.0);

struct StandardizeResult {
    BSplinePatch patch;
    double chamfer = 0.0;  // symmetric mean squared distance, samples vs refit
};

/// Refits dense surface samples to a fixed-resolution control grid
/// (default 20x20). Throws FitError if the refit misses `cd_threshold`.
StandardizeResult standardize_patch(const std::vector<UVSample>& dense_samples, bool closed_u,
                                    bool closed_v, double cd_threshold = 1e-3, int grid_size = 20);

/// PCA-plane parametrization of an unorganized segment: coordinates along
/// the two dominant principal directions, min-max normalized to [0,1]^2.
std::vector<Vec2> init_parametrization(const std::vector<Vec3>& points);

/// Symmetric mean squared nearest-neighbor distance between a point set and
/// a dense sampling of the patch (`nu x nv`, default 60x60).
double patch_chamfer(const BSplinePatch& patch, const std::vector<Vec3>& points, int nu = 60,
                     int nv = 60);

}  // namespace parsefit::bspline
