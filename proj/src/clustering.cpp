#include "parsefit/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <vector>

#include "parsefit/kernels.hpp"

namespace parsefit::clustering {

Bandwidth estimate_bandwidth(const embedding::EmbeddingMatrix& rows, int neighbor_rank,
                             double floor) {
    if (rows.rows() < 2) throw std::invalid_argument("estimate_bandwidth: need at least 2 rows");
    if (neighbor_rank < 1) throw std::invalid_argument("estimate_bandwidth: rank must be >= 1");
    const Eigen::VectorXd d = kernels::rank_neighbor_distance(rows, neighbor_rank);
    double beta = d.mean();
    if (beta < floor) {
        std::cerr << "[parsefit] warning: degenerate bandwidth " << beta << " clamped to " << floor
                  << "\n";
        beta = floor;
    }
    return Bandwidth{beta};
}

MeanShiftResult mean_shift(const embedding::EmbeddingMatrix& rows, Bandwidth beta,
                           int max_iterations, double tolerance) {
    if (!(beta.beta > 0.0)) throw std::invalid_argument("mean_shift: bandwidth must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("mean_shift: need at least 1 iteration");
    MeanShiftResult result;
    result.modes = rows;
    const int n = static_cast<int>(rows.rows());
    std::vector<int> active(static_cast<std::size_t>(n));
    std::iota(active.begin(), active.end(), 0);
    Eigen::MatrixXd next;
    for (int iter = 0; iter < max_iterations && !active.empty(); ++iter) {
        kernels::mean_shift_iterate(rows, result.modes, beta.beta, active, next);
        std::vector<int> still_moving;
        still_moving.reserve(active.size());
        for (int idx : active) {
            if ((next.row(idx) - result.modes.row(idx)).norm() >= tolerance) {
                still_moving.push_back(idx);
            }
        }
        result.modes.swap(next);
        active.swap(still_moving);
        result.iterations = iter + 1;
    }
    return result;
}

ClusterResult extract_clusters(const Eigen::MatrixXd& modes,
                               const embedding::EmbeddingMatrix& rows, Bandwidth beta,
                               int iterations_run) {
    if (modes.rows() != rows.rows() || modes.cols() != rows.cols()) {
        throw std::invalid_argument("extract_clusters: shape mismatch");
    }
    const int n = static_cast<int>(modes.rows());
    const Eigen::VectorXd density = kernels::vmf_density(modes, rows, beta.beta);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (density[a] != density[b]) return density[a] > density[b];
        return a < b;
    });

    std::vector<char> suppressed(static_cast<std::size_t>(n), 0);
    std::vector<int> center_rows;
    for (int idx : order) {
        if (suppressed[static_cast<std::size_t>(idx)]) continue;
        center_rows.push_back(idx);
        for (int j = 0; j < n; ++j) {
            if (!suppressed[static_cast<std::size_t>(j)] &&
                (modes.row(idx) - modes.row(j)).norm() <= beta.beta) {
                suppressed[static_cast<std::size_t>(j)] = 1;
            }
        }
    }

    ClusterResult result;
    result.beta = beta.beta;
    result.iterations_run = iterations_run;
    const int k = static_cast<int>(center_rows.size());
    result.centers.resize(k, modes.cols());
    for (int c = 0; c < k; ++c) result.centers.row(c) = modes.row(center_rows[static_cast<std::size_t>(c)]);

    result.hard_labels.resize(n);
    result.membership = Eigen::MatrixXd::Zero(n, k);
    const Eigen::MatrixXd affinity = modes * result.centers.transpose();  // nearest = max dot
    for (int i = 0; i < n; ++i) {
        int best = 0;
        affinity.row(i).maxCoeff(&best);
        result.hard_labels[i] = best;
        result.membership(i, best) = 1.0;
    }
    return result;
}

Eigen::MatrixXd soft_membership(const Eigen::MatrixXd& modes, const Eigen::MatrixXd& centers,
                                Bandwidth beta) {
    if (centers.rows() < 1) throw std::invalid_argument("soft_membership: need >= 1 center");
    const double inv_b2 = 1.0 / (beta.beta * beta.beta);
    Eigen::MatrixXd w = modes * centers.transpose();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double shift = w.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index k = 0; k < w.cols(); ++k) {
            w(i, k) = std::exp((w(i, k) - shift) * inv_b2);
            sum += w(i, k);
        }
        w.row(i) /= sum;
    }
    return w;
}

}  // namespace parsefit::clustering
