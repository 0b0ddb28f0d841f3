#pragma once

#include <Eigen/Core>

#include "parsefit/embedding.hpp"
#include "parsefit/types.hpp"

namespace parsefit::clustering {

struct Bandwidth {
    double beta = 0.0;
};

/// Mean of the per-point Euclidean distance to the rank-th nearest neighbor
/// in embedding space (rank clamped to N-1). Degenerate inputs are clamped
/// to `floor` with a warning on stderr.
Bandwidth estimate_bandwidth(const embedding::EmbeddingMatrix& rows, int neighbor_rank = 150,
                             double floor = 1e-4);

struct MeanShiftResult {
    Eigen::MatrixXd modes;  // converged embeddings Z, unit rows
    int iterations = 0;
};

/// von Mises-Fisher mean-shift on the unit hypersphere. Each row iterates
///   z <- sum_j y_j exp(z.y_j/beta^2) / sum_j exp(z.y_j/beta^2),
/// renormalized, until it moves less than `tolerance` or `max_iterations`
/// is reached. Rows below tolerance are frozen (the update is their fixed
/// point within tolerance).
MeanShiftResult mean_shift(const embedding::EmbeddingMatrix& rows, Bandwidth beta,
                           int max_iterations = 50, double tolerance = 1e-5);

struct ClusterResult {
    Eigen::MatrixXd centers;      // K x D unit rows, ordered by decreasing density
    Eigen::VectorXi hard_labels;  // N, argmax membership
    Eigen::MatrixXd membership;   // N x K, one-hot rows
    double beta = 0.0;
    int iterations_run = 0;
};

/// Non-maximum suppression over converged modes: points in decreasing
/// density order become centers, suppressing everything within beta.
/// Density ties break toward the lower point index. Labels assign each
/// point to its nearest center.
ClusterResult extract_clusters(const Eigen::MatrixXd& modes,
                               const embedding::EmbeddingMatrix& rows, Bandwidth beta,
                               int iterations_run = 0);

/// Row-stochastic memberships W[i,k] = softmax_k(z_k.z_i / beta^2).
Eigen::MatrixXd soft_membership(const Eigen::MatrixXd& modes, const Eigen::MatrixXd& centers,
                                Bandwidth beta);

}  // namespace parsefit::clustering
