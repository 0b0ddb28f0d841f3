#include "parsefit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

// Straight-line reference implementations. These stay deliberately plain:
// the unit tests compare them against the OpenMP kernels, and the benchmark
// tool reports the speedup.

namespace parsefit::kernels::serial {

Eigen::VectorXd rank_neighbor_distance(const Eigen::MatrixXd& rows, int rank) {
    const int n = static_cast<int>(rows.rows());
    if (n < 2) throw std::invalid_argument("rank_neighbor_distance: need at least 2 rows");
    const int r = std::clamp(rank, 1, n - 1);
    Eigen::VectorXd out(n);
    std::vector<double> d2(static_cast<std::size_t>(n) - 1);
    for (int i = 0; i < n; ++i) {
        int m = 0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            d2[m++] = (rows.row(i) - rows.row(j)).squaredNorm();
        }
        std::nth_element(d2.begin(), d2.begin() + (r - 1), d2.end());
        out[i] = std::sqrt(d2[r - 1]);
    }
    return out;
}

void mean_shift_iterate(const Eigen::MatrixXd& anchors, const Eigen::MatrixXd& current,
                        double beta, const std::vector<int>& active, Eigen::MatrixXd& out) {
    const double inv_b2 = 1.0 / (beta * beta);
    const int n = static_cast<int>(anchors.rows());
    out = current;
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int idx : active) {
        double shift = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            w[static_cast<std::size_t>(j)] = current.row(idx).dot(anchors.row(j));
            shift = std::max(shift, w[static_cast<std::size_t>(j)]);
        }
        double wsum = 0.0;
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(anchors.cols());
        for (int j = 0; j < n; ++j) {
            const double arg = (w[static_cast<std::size_t>(j)] - shift) * inv_b2;
            // weights below ~1e-17 of the max cannot affect the mean
            const double g = arg > -39.0 ? std::exp(arg) : 0.0;
            acc += g * anchors.row(j);
            wsum += g;
        }
        acc /= wsum;
        const double norm = acc.norm();
        if (norm > 0.0) acc /= norm;
        out.row(idx) = acc;
    }
}

Eigen::VectorXd vmf_density(const Eigen::MatrixXd& modes, const Eigen::MatrixXd& anchors,
                            double beta) {
    const double inv_b2 = 1.0 / (beta * beta);
    Eigen::VectorXd out(modes.rows());
    for (int i = 0; i < modes.rows(); ++i) {
        double sum = 0.0;
        for (int j = 0; j < anchors.rows(); ++j) {
            const double arg = (modes.row(i).dot(anchors.row(j)) - 1.0) * inv_b2;
            if (arg > -39.0) sum += std::exp(arg);
        }
        out[i] = sum;
    }
    return out;
}

Eigen::VectorXd min_sq_dist(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    if (to.empty()) throw std::invalid_argument("min_sq_dist: empty target set");
    Eigen::VectorXd out(static_cast<Eigen::Index>(from.size()));
    for (std::size_t i = 0; i < from.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& q : to) best = std::min(best, (from[i] - q).squaredNorm());
        out[static_cast<Eigen::Index>(i)] = best;
    }
    return out;
}

}  // namespace parsefit::kernels::serial
