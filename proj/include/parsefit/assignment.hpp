#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

namespace parsefit::assignment {

/// Minimum-cost maximal matching of a rectangular cost matrix.
/// pairs has min(rows, cols) entries; each row and column appears at most
/// once; total_cost is the sum of the matched entries.
struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
    double total_cost = 0.0;
};

/// Hungarian method (shortest augmenting paths with potentials).
/// Rectangular inputs are padded to square with a constant above the
/// largest entry; padded pairs are dropped from the output. Ties are
/// broken by the lowest row/column index. Throws std::invalid_argument
/// on empty or non-finite input.
Assignment solve_assignment(const Eigen::MatrixXd& costs);

}  // namespace parsefit::assignment
