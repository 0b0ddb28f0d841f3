#include "parsefit/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace parsefit::assignment {

Assignment solve_assignment(const Eigen::MatrixXd& costs) {
    const int rows = static_cast<int>(costs.rows());
    const int cols = static_cast<int>(costs.cols());
    if (rows < 1 || cols < 1) throw std::invalid_argument("solve_assignment: empty cost matrix");
    if (!costs.allFinite()) throw std::invalid_argument("solve_assignment: non-finite cost entry");

    const int n = std::max(rows, cols);
    const double pad = costs.maxCoeff() + 1.0;
    std::vector<double> a(static_cast<std::size_t>(n) * n, pad);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) a[static_cast<std::size_t>(i) * n + j] = costs(i, j);
    }

    // potentials over rows/columns, 1-indexed with a virtual column 0
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row (1-indexed)
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    std::vector<double> minv(static_cast<std::size_t>(n) + 1);
    std::vector<char> used(static_cast<std::size_t>(n) + 1);

    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            const double* cost_row = &a[static_cast<std::size_t>(i0 - 1) * n];
            double delta = kInf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost_row[j - 1] - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment out;
    out.pairs.reserve(static_cast<std::size_t>(std::min(rows, cols)));
    for (int j = 1; j <= n; ++j) {
        const int i = match[static_cast<std::size_t>(j)];
        if (i >= 1 && i <= rows && j <= cols) {
            out.pairs.emplace_back(i - 1, j - 1);
            out.total_cost += costs(i - 1, j - 1);
        }
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    return out;
}

}  // namespace parsefit::assignment
