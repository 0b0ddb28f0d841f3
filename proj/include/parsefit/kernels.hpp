#pragma once

#include <vector>

#include <Eigen/Core>

#include "parsefit/types.hpp"

namespace parsefit::kernels {

// Data-parallel inner loops shared by clustering and the metric suite.
// Every kernel here has a serial twin in kernels::serial with identical
// semantics; the twins are the reference implementations used by the unit
// tests and the benchmark tool.

/// Per row: Euclidean distance to its rank-th nearest *other* row (rank >= 1).
Eigen::VectorXd rank_neighbor_distance(const Eigen::MatrixXd& rows, int rank);

/// One von Mises-Fisher mean-shift update of the rows of `current` listed in
/// `active`, against the fixed sample set `anchors`:
///   z' = sum_j y_j exp(z.y_j / beta^2) / sum_j exp(z.y_j / beta^2),
/// renormalized to unit length. Rows not listed in `active` are copied
/// through unchanged. Exponents are shifted by the per-row maximum before
/// exponentiation.
void mean_shift_iterate(const Eigen::MatrixXd& anchors, const Eigen::MatrixXd& current,
                        double beta, const std::vector<int>& active, Eigen::MatrixXd& out);

/// Relative kernel density per row of `modes`:
///   d_i = sum_j exp((z_i.y_j - 1) / beta^2).
/// The global shift by -1/beta^2 keeps the exponent non-positive for unit
/// rows; it rescales all densities by one constant, so ordering and ratios
/// are preserved.
Eigen::VectorXd vmf_density(const Eigen::MatrixXd& modes, const Eigen::MatrixXd& anchors,
                            double beta);

/// Per point of `from`: squared distance to the nearest point of `to`.
Eigen::VectorXd min_sq_dist(const std::vector<Vec3>& from, const std::vector<Vec3>& to);

namespace serial {

Eigen::VectorXd rank_neighbor_distance(const Eigen::MatrixXd& rows, int rank);
void mean_shift_iterate(const Eigen::MatrixXd& anchors, const Eigen::MatrixXd& current,
                        double beta, const std::vector<int>& active, Eigen::MatrixXd& out);
Eigen::VectorXd vmf_density(const Eigen::MatrixXd& modes, const Eigen::MatrixXd& anchors,
                            double beta);
Eigen::VectorXd min_sq_dist(const std::vector<Vec3>& from, const std::vector<Vec3>& to);

}  // namespace serial

}  // namespace parsefit::kernels
