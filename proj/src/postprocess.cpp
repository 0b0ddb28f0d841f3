#include "parsefit/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SVD>

#include "parsefit/assignment.hpp"

namespace parsefit::postprocess {

QuadMesh tessellate(const bspline::BSplinePatch& patch, int nu, int nv) {
    QuadMesh mesh;
    mesh.nu = nu;
    mesh.nv = nv;
    mesh.closed_u = patch.grid.closed_u;
    mesh.closed_v = patch.grid.closed_v;
    const auto samples = bspline::sample_uniform(patch, nu, nv);
    mesh.vertices.reserve(samples.size());
    mesh.uvs.reserve(samples.size());
    for (const auto& s : samples) {
        mesh.vertices.push_back(s.position);
        mesh.uvs.push_back(s.uv);
    }
    mesh.boundary_mask.assign(samples.size(), 0);
    const auto vid = [&](int iu, int iv) { return (iu % nu) * nv + (iv % nv); };
    for (int iu = 0; iu < nu; ++iu) {
        for (int iv = 0; iv < nv; ++iv) {
            const bool ub = !mesh.closed_u && (iu == 0 || iu == nu - 1);
            const bool vb = !mesh.closed_v && (iv == 0 || iv == nv - 1);
            if (ub || vb) mesh.boundary_mask[static_cast<std::size_t>(vid(iu, iv))] = 1;
        }
    }
    const int qu = mesh.closed_u ? nu : nu - 1;
    const int qv = mesh.closed_v ? nv : nv - 1;
    mesh.quads.reserve(static_cast<std::size_t>(qu) * qv);
    for (int iu = 0; iu < qu; ++iu) {
        for (int iv = 0; iv < qv; ++iv) {
            mesh.quads.push_back(
                {vid(iu, iv), vid(iu + 1, iv), vid(iu + 1, iv + 1), vid(iu, iv + 1)});
        }
    }
    return mesh;
}

std::vector<UVMatch> match_uv(const std::vector<bspline::UVSample>& samples,
                              std::span<const Vec3> segment) {
    if (segment.empty()) throw std::invalid_argument("match_uv: empty segment");
    if (samples.empty()) throw std::invalid_argument("match_uv: empty sample set");
    Eigen::MatrixXd costs(static_cast<Eigen::Index>(samples.size()),
                          static_cast<Eigen::Index>(segment.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = 0; j < segment.size(); ++j) {
            costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (samples[i].position - segment[j]).squaredNorm();
        }
    }
    const auto solution = assignment::solve_assignment(costs);
    std::vector<UVMatch> matches;
    matches.reserve(solution.pairs.size());
    for (const auto& [i, j] : solution.pairs) {
        matches.push_back({segment[static_cast<std::size_t>(j)],
                           samples[static_cast<std::size_t>(i)].uv, i, j});
    }
    return matches;
}

namespace {

std::vector<Vec3> subsample(std::span<const Vec3> segment, int max_points) {
    std::vector<Vec3> out;
    if (max_points <= 0 || static_cast<int>(segment.size()) <= max_points) {
        out.assign(segment.begin(), segment.end());
        return out;
    }
    out.reserve(static_cast<std::size_t>(max_points));
    const double stride = static_cast<double>(segment.size()) / max_points;
    for (int i = 0; i < max_points; ++i) {
        out.push_back(segment[static_cast<std::size_t>(i * stride)]);
    }
    return out;
}

}  // namespace

std::vector<UVMatch> match_uv_by_assignment(const bspline::BSplinePatch& patch,
                                            std::span<const Vec3> segment, int max_points) {
    const auto samples = bspline::sample_uniform(patch, 40, 40);
    const auto points = subsample(segment, max_points);
    return match_uv(samples, points);
}

ArapResult arap_deform(const QuadMesh& mesh, const std::vector<int>& pivots,
                       const std::vector<Vec3>& targets, int iterations, double soft_weight) {
    const int n = static_cast<int>(mesh.vertices.size());
    if (pivots.size() != targets.size()) {
        throw std::invalid_argument("arap_deform: pivot/target count mismatch");
    }
    for (int p : pivots) {
        if (p < 0 || p >= n) throw std::invalid_argument("arap_deform: pivot index out of range");
    }

    // one-ring connectivity from the triangulated quads
    std::set<std::pair<int, int>> edge_set;
    const auto add_edge = [&](int a, int b) {
        edge_set.insert({std::min(a, b), std::max(a, b)});
    };
    for (const auto& q : mesh.quads) {
        add_edge(q[0], q[1]);
        add_edge(q[1], q[2]);
        add_edge(q[2], q[3]);
        add_edge(q[3], q[0]);
        add_edge(q[0], q[2]);  // quad split diagonal
    }
    std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
    for (const auto& [a, b] : edge_set) {
        neighbors[static_cast<std::size_t>(a)].push_back(b);
        neighbors[static_cast<std::size_t>(b)].push_back(a);
    }

    const bool hard = soft_weight <= 0.0;
    std::vector<char> fixed(static_cast<std::size_t>(n), 0);
    std::vector<Vec3> anchor(static_cast<std::size_t>(n), Vec3::Zero());
    for (std::size_t k = 0; k < pivots.size(); ++k) {
        fixed[static_cast<std::size_t>(pivots[k])] = 1;
        anchor[static_cast<std::size_t>(pivots[k])] = targets[k];
    }

    std::vector<Vec3> pos = mesh.vertices;
    if (hard) {
        for (std::size_t k = 0; k < pivots.size(); ++k) pos[static_cast<std::size_t>(pivots[k])] = targets[k];
    }

    // free-vertex Laplacian (uniform weights), factored once
    std::vector<int> free_index(static_cast<std::size_t>(n), -1);
    int n_free = 0;
    for (int i = 0; i < n; ++i) {
        if (!(hard && fixed[static_cast<std::size_t>(i)])) free_index[static_cast<std::size_t>(i)] = n_free++;
    }
    std::vector<Eigen::Triplet<double>> triplets;
    for (int i = 0; i < n; ++i) {
        const int fi = free_index[static_cast<std::size_t>(i)];
        if (fi < 0) continue;
        double diag = static_cast<double>(neighbors[static_cast<std::size_t>(i)].size());
        // 0.5 factor keeps the solve the exact minimizer of the tracked
        // energy (directed edge sum + soft_weight * penalties)
        if (!hard && fixed[static_cast<std::size_t>(i)]) diag += 0.5 * soft_weight;
        triplets.emplace_back(fi, fi, diag);
        for (int j : neighbors[static_cast<std::size_t>(i)]) {
            const int fj = free_index[static_cast<std::size_t>(j)];
            if (fj >= 0) triplets.emplace_back(fi, fj, -1.0);
        }
    }
    Eigen::SparseMatrix<double> lap(n_free, n_free);
    lap.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lap);
    if (solver.info() != Eigen::Success) throw FitError("arap_deform: singular system");

    std::vector<Mat3> rot(static_cast<std::size_t>(n), Mat3::Identity());
    const auto energy = [&]() {
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j : neighbors[static_cast<std::size_t>(i)]) {
                const Vec3 rest = mesh.vertices[static_cast<std::size_t>(i)] -
                                  mesh.vertices[static_cast<std::size_t>(j)];
                const Vec3 cur = pos[static_cast<std::size_t>(i)] - pos[static_cast<std::size_t>(j)];
                e += (cur - rot[static_cast<std::size_t>(i)] * rest).squaredNorm();
            }
        }
        if (!hard) {
            for (std::size_t k = 0; k < pivots.size(); ++k) {
                e += soft_weight *
                     (pos[static_cast<std::size_t>(pivots[k])] - targets[k]).squaredNorm();
            }
        }
        return e;
    };

    // membrane initialization: one global solve with identity rotations,
    // which already reproduces pure translations exactly
    const auto global_step = [&]() {
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_free, 3);
        for (int i = 0; i < n; ++i) {
            const int fi = free_index[static_cast<std::size_t>(i)];
            if (fi < 0) continue;
            Vec3 b = Vec3::Zero();
            for (int j : neighbors[static_cast<std::size_t>(i)]) {
                const Vec3 rest = mesh.vertices[static_cast<std::size_t>(i)] -
                                  mesh.vertices[static_cast<std::size_t>(j)];
                b += 0.5 * (rot[static_cast<std::size_t>(i)] + rot[static_cast<std::size_t>(j)]) * rest;
                if (free_index[static_cast<std::size_t>(j)] < 0) {
                    b += pos[static_cast<std::size_t>(j)];  // hard-constrained neighbor
                }
            }
            if (!hard && fixed[static_cast<std::size_t>(i)]) {
                b += 0.5 * soft_weight * anchor[static_cast<std::size_t>(i)];
            }
            rhs.row(fi) = b.transpose();
        }
        const Eigen::MatrixXd sol = solver.solve(rhs);
        for (int i = 0; i < n; ++i) {
            const int fi = free_index[static_cast<std::size_t>(i)];
            if (fi >= 0) pos[static_cast<std::size_t>(i)] = sol.row(fi).transpose();
        }
    };
    global_step();

    ArapResult result;
    for (int iter = 0; iter < iterations; ++iter) {
        // local step: per-vertex rotation via polar decomposition of the
        // rest/deformed spoke covariance
        for (int i = 0; i < n; ++i) {
            Mat3 s = Mat3::Zero();
            for (int j : neighbors[static_cast<std::size_t>(i)]) {
                const Vec3 rest = mesh.vertices[static_cast<std::size_t>(i)] -
                                  mesh.vertices[static_cast<std::size_t>(j)];
                const Vec3 cur = pos[static_cast<std::size_t>(i)] - pos[static_cast<std::size_t>(j)];
                s += rest * cur.transpose();
            }
            Eigen::JacobiSVD<Mat3> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Mat3 v = svd.matrixV();
            if ((v * svd.matrixU().transpose()).determinant() < 0.0) v.col(2) = -v.col(2);
            rot[static_cast<std::size_t>(i)] = v * svd.matrixU().transpose();
        }
        // global step: solve the uniform Laplacian system with rotated rest
        // spokes on the right-hand side
        global_step();
        result.energies.push_back(energy());
    }
    result.vertices = std::move(pos);
    return result;
}

bspline::BSplinePatch refit_from_matches(const std::vector<UVMatch>& matches, int rows, int cols,
                                         bool closed_u, bool closed_v) {
    std::vector<bspline::UVSample> samples;
    samples.reserve(matches.size());
    for (const UVMatch& m : matches) samples.push_back({m.uv, m.point});
    // callers gate these fits by a measured Chamfer distance, so the
    // control-extent guard stays off
    return bspline::make_patch(
        bspline::fit_control_grid(samples, rows, cols, closed_u, closed_v, 0.0));
}

namespace {

struct Attempt {
    bspline::BSplinePatch patch;
    double chamfer = 0.0;
};

Attempt match_and_refit(const bspline::BSplinePatch& current, std::span<const Vec3> segment,
                        const std::vector<Vec3>& full_segment, int rows, int cols,
                        int match_max_points) {
    const auto matches = match_uv_by_assignment(current, segment, match_max_points);
    Attempt a;
    a.patch = refit_from_matches(matches, rows, cols, current.grid.closed_u,
                                 current.grid.closed_v);
    a.chamfer = bspline::patch_chamfer(a.patch, full_segment, 40, 40);
    return a;
}

}  // namespace

RefineResult refine_to_tolerance(const bspline::BSplinePatch& patch, std::span<const Vec3> segment,
                                 const FitToleranceConfig& config) {
    if (segment.empty()) throw std::invalid_argument("refine_to_tolerance: empty segment");
    const std::vector<Vec3> full(segment.begin(), segment.end());
    RefineResult result;
    int rows = patch.grid.rows;
    int cols = patch.grid.cols;

    Attempt current;
    try {
        current = match_and_refit(patch, segment, full, rows, cols, config.match_max_points);
    } catch (const FitError&) {
        result.patch = patch;
        result.chamfer = bspline::patch_chamfer(patch, full, 40, 40);
        result.success = result.chamfer <= config.tolerance;
        result.grids_visited.emplace_back(rows, cols);
        return result;
    }
    result.grids_visited.emplace_back(rows, cols);

    if (current.chamfer <= config.tolerance) {
        // already inside tolerance: walk the resolution down while it holds
        while (rows > config.min_grid || cols > config.min_grid) {
            const int next_rows = std::max(config.min_grid, rows / 2);
            const int next_cols = std::max(config.min_grid, cols / 2);
            Attempt smaller;
            try {
                smaller = match_and_refit(current.patch, segment, full, next_rows, next_cols,
                                          config.match_max_points);
            } catch (const FitError&) {
                break;
            }
            result.grids_visited.emplace_back(next_rows, next_cols);
            if (smaller.chamfer > config.tolerance) break;
            current = std::move(smaller);
            rows = next_rows;
            cols = next_cols;
        }
        result.patch = std::move(current.patch);
        result.chamfer = current.chamfer;
        result.success = true;
        return result;
    }

    Attempt best = current;
    while (rows < config.max_grid || cols < config.max_grid) {
        rows = std::min(config.max_grid, rows * 2);
        cols = std::min(config.max_grid, cols * 2);
        Attempt finer;
        try {
            finer = match_and_refit(current.patch, segment, full, rows, cols,
                                    config.match_max_points);
        } catch (const FitError&) {
            break;  // not enough matched points for this resolution
        }
        result.grids_visited.emplace_back(rows, cols);
        current = finer;
        if (finer.chamfer < best.chamfer) best = std::move(finer);
        if (best.chamfer <= config.tolerance) break;
    }
    result.patch = std::move(best.patch);
    result.chamfer = best.chamfer;
    result.success = best.chamfer <= config.tolerance;
    return result;
}

bspline::BSplinePatch optimize_coverage(const bspline::BSplinePatch& patch,
                                        std::span<const Vec3> segment, int arap_iterations,
                                        int match_max_points) {
    if (segment.empty()) throw std::invalid_argument("optimize_coverage: empty segment");
    QuadMesh mesh = tessellate(patch, 40, 40);
    std::vector<bspline::UVSample> samples(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        samples[i] = {mesh.uvs[i], mesh.vertices[i]};
    }
    auto points = subsample(segment, match_max_points);
    // small segments are upsampled by duplication so that every quad vertex
    // (in particular the whole boundary ring) receives a match
    const std::size_t base = points.size();
    for (std::size_t i = 0; points.size() < samples.size(); ++i) {
        points.push_back(points[i % base]);
    }
    const auto first = match_uv(samples, points);

    std::vector<int> pivots;
    std::vector<Vec3> targets;
    double soft_weight = 0.0;
    const bool fully_closed = mesh.closed_u && mesh.closed_v;
    for (const UVMatch& m : first) {
        if (fully_closed || mesh.boundary_mask[static_cast<std::size_t>(m.sample_index)]) {
            pivots.push_back(m.sample_index);
            targets.push_back(m.point);
        }
    }
    if (fully_closed) soft_weight = 0.1;
    if (!pivots.empty()) {
        const auto deformed = arap_deform(mesh, pivots, targets, arap_iterations, soft_weight);
        for (std::size_t i = 0; i < samples.size(); ++i) samples[i].position = deformed.vertices[i];
    }
    const auto second = match_uv(samples, points);
    return refit_from_matches(second, patch.grid.rows, patch.grid.cols, patch.grid.closed_u,
                              patch.grid.closed_v);
}

}  // namespace parsefit::postprocess
