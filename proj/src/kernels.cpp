#include "parsefit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace parsefit::kernels {

Eigen::VectorXd rank_neighbor_distance(const Eigen::MatrixXd& rows, int rank) {
    const int n = static_cast<int>(rows.rows());
    if (n < 2) throw std::invalid_argument("rank_neighbor_distance: need at least 2 rows");
    const int r = std::clamp(rank, 1, n - 1);
    Eigen::VectorXd out(n);
#pragma omp parallel
    {
        std::vector<double> d2(static_cast<std::size_t>(n) - 1);
#pragma omp for schedule(dynamic, 16)
        for (int i = 0; i < n; ++i) {
            int m = 0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                d2[m++] = (rows.row(i) - rows.row(j)).squaredNorm();
            }
            std::nth_element(d2.begin(), d2.begin() + (r - 1), d2.end());
            out[i] = std::sqrt(d2[r - 1]);
        }
    }
    return out;
}

void mean_shift_iterate(const Eigen::MatrixXd& anchors, const Eigen::MatrixXd& current,
                        double beta, const std::vector<int>& active, Eigen::MatrixXd& out) {
    const double inv_b2 = 1.0 / (beta * beta);
    out = current;
    const int n_active = static_cast<int>(active.size());
    constexpr int kBlock = 128;
#pragma omp parallel for schedule(dynamic, 1)
    for (int b = 0; b < (n_active + kBlock - 1) / kBlock; ++b) {
        const int lo = b * kBlock;
        const int hi = std::min(lo + kBlock, n_active);
        Eigen::MatrixXd zblock(hi - lo, current.cols());
        for (int k = lo; k < hi; ++k) zblock.row(k - lo) = current.row(active[k]);
        // dot products against every anchor, then a numerically shifted softmax mean
        Eigen::MatrixXd dots = zblock * anchors.transpose();
        for (int k = lo; k < hi; ++k) {
            Eigen::VectorXd row = dots.row(k - lo);
            const double shift = row.maxCoeff();
            double wsum = 0.0;
            for (int j = 0; j < row.size(); ++j) {
                const double arg = (row[j] - shift) * inv_b2;
                // weights below ~1e-17 of the max cannot affect the mean
                row[j] = arg > -39.0 ? std::exp(arg) : 0.0;
                wsum += row[j];
            }
            Eigen::RowVectorXd shifted = (row.transpose() * anchors) / wsum;
            const double norm = shifted.norm();
            if (norm > 0.0) shifted /= norm;
            out.row(active[k]) = shifted;
        }
    }
}

Eigen::VectorXd vmf_density(const Eigen::MatrixXd& modes, const Eigen::MatrixXd& anchors,
                            double beta) {
    const double inv_b2 = 1.0 / (beta * beta);
    const int n = static_cast<int>(modes.rows());
    Eigen::VectorXd out(n);
    constexpr int kBlock = 128;
#pragma omp parallel for schedule(dynamic, 1)
    for (int b = 0; b < (n + kBlock - 1) / kBlock; ++b) {
        const int lo = b * kBlock;
        const int hi = std::min(lo + kBlock, n);
        Eigen::MatrixXd dots = modes.middleRows(lo, hi - lo) * anchors.transpose();
        for (int i = lo; i < hi; ++i) {
            double sum = 0.0;
            for (int j = 0; j < dots.cols(); ++j) {
                const double arg = (dots(i - lo, j) - 1.0) * inv_b2;
                if (arg > -39.0) sum += std::exp(arg);
            }
            out[i] = sum;
        }
    }
    return out;
}

Eigen::VectorXd min_sq_dist(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    if (to.empty()) throw std::invalid_argument("min_sq_dist: empty target set");
    Eigen::VectorXd out(static_cast<Eigen::Index>(from.size()));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(from.size()); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& q : to) {
            const double d2 = (from[static_cast<std::size_t>(i)] - q).squaredNorm();
            if (d2 < best) best = d2;
        }
        out[i] = best;
    }
    return out;
}

}  // namespace parsefit::kernels
