#pragma once

#include <vector>

#include <Eigen/Core>

#include "parsefit/bspline.hpp"
#include "parsefit/primitives.hpp"
#include "parsefit/types.hpp"

namespace parsefit::losses {

struct TripletConfig {
    double margin = 0.9;
};

/// Hinge triplet over unit embeddings: max(|a-b| - |a-c| + margin, 0).
double triplet_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                    const Eigen::VectorXd& negative, const TripletConfig& config = {});

struct Triplet {
    Eigen::VectorXd anchor, positive, negative;
};

/// Sum over triplet sets of the per-set mean triplet loss.
double triplet_loss_batch(const std::vector<std::vector<Triplet>>& sets,
                          const TripletConfig& config = {});

/// Mean cross entropy of row-stochastic type probabilities against labels.
double classification_loss(const Eigen::MatrixXd& probabilities, const std::vector<int>& labels);

/// One control-grid index permutation: out(p,q) = in(row_map[p], col_map[q]),
/// applied after an optional transpose.
struct GridPermutation {
    std::vector<int> row_map;
    std::vector<int> col_map;
    bool transpose = false;
};

/// The reparametrization symmetries a control grid can undergo without
/// changing the surface: 8 for open grids (u/v flips x transpose), 160 for
/// grids closed in u (cyclic u-shifts x flips x transpose). Identity first.
std::vector<GridPermutation> permutation_set(int rows, int cols, bool closed);

bspline::ControlGrid apply_permutation(const bspline::ControlGrid& grid,
                                       const GridPermutation& perm);

/// min over the permutation set of the mean squared control-point
/// difference.
double control_point_loss(const bspline::ControlGrid& predicted,
                          const bspline::ControlGrid& ground_truth, bool closed);

/// Mean squared difference of the 5-point grid Laplacians between the
/// predicted patch sampled on an nu x nv parameter grid and ground-truth
/// samples with the same grid structure, after Hungarian matching of the
/// sample sets. Averaged over matched pairs whose endpoints are both
/// interior grid nodes.
double laplacian_loss(const bspline::BSplinePatch& predicted,
                      const std::vector<Vec3>& ground_truth_samples, int nu = 40, int nv = 40);

/// Mean over patches of the mean squared point-to-patch distance.
double patch_distance_loss(const std::vector<primitives::PrimitivePatch>& patches,
                           const std::vector<std::vector<Vec3>>& samples_per_patch,
                           int spline_samples = 2500);

}  // namespace parsefit::losses
