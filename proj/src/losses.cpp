#include "parsefit/losses.hpp"

#include <algorithm>
#include <cmath>

#include "parsefit/assignment.hpp"

namespace parsefit::losses {

namespace {

void check_unit(const Eigen::VectorXd& v, const char* name) {
    if (std::abs(v.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument(std::string("triplet_loss: ") + name + " is not unit length");
    }
}

}  // namespace

double triplet_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                    const Eigen::VectorXd& negative, const TripletConfig& config) {
    if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
        throw std::invalid_argument("triplet_loss: dimension mismatch");
    }
    check_unit(anchor, "anchor");
    check_unit(positive, "positive");
    check_unit(negative, "negative");
    const double pull = (anchor - positive).norm();
    const double push = (anchor - negative).norm();
    return std::max(pull - push + config.margin, 0.0);
}

double triplet_loss_batch(const std::vector<std::vector<Triplet>>& sets,
                          const TripletConfig& config) {
    double total = 0.0;
    for (const auto& set : sets) {
        if (set.empty()) continue;
        double sum = 0.0;
        for (const Triplet& t : set) sum += triplet_loss(t.anchor, t.positive, t.negative, config);
        total += sum / static_cast<double>(set.size());
    }
    return total;
}

double classification_loss(const Eigen::MatrixXd& probabilities, const std::vector<int>& labels) {
    if (static_cast<std::size_t>(probabilities.rows()) != labels.size()) {
        throw std::invalid_argument("classification_loss: row/label count mismatch");
    }
    if (probabilities.rows() == 0) throw std::invalid_argument("classification_loss: empty input");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
        if (std::abs(probabilities.row(i).sum() - 1.0) > 1e-6) {
            throw std::invalid_argument("classification_loss: row " + std::to_string(i) +
                                        " does not sum to 1");
        }
        const int t = labels[static_cast<std::size_t>(i)];
        if (t < 0 || t >= probabilities.cols()) {
            throw std::invalid_argument("classification_loss: label out of range");
        }
        sum -= std::log(std::max(probabilities(i, t), 1e-12));
    }
    return sum / static_cast<double>(probabilities.rows());
}

std::vector<GridPermutation> permutation_set(int rows, int cols, bool closed) {
    std::vector<GridPermutation> out;
    const bool square = rows == cols;
    const auto make_maps = [&](int shift, bool ru, bool rv) {
        GridPermutation p;
        p.row_map.resize(static_cast<std::size_t>(rows));
        p.col_map.resize(static_cast<std::size_t>(cols));
        for (int i = 0; i < rows; ++i) {
            const int base = ru ? rows - 1 - i : i;
            p.row_map[static_cast<std::size_t>(i)] = (base + shift) % rows;
        }
        for (int j = 0; j < cols; ++j) {
            p.col_map[static_cast<std::size_t>(j)] = rv ? cols - 1 - j : j;
        }
        return p;
    };
    const int shifts = closed ? rows : 1;
    for (int tr = 0; tr < (square ? 2 : 1); ++tr) {
        for (int ru = 0; ru < 2; ++ru) {
            for (int rv = 0; rv < 2; ++rv) {
                for (int s = 0; s < shifts; ++s) {
                    GridPermutation p = make_maps(s, ru != 0, rv != 0);
                    p.transpose = tr != 0;
                    out.push_back(std::move(p));
                }
            }
        }
    }
    return out;
}

bspline::ControlGrid apply_permutation(const bspline::ControlGrid& grid,
                                       const GridPermutation& perm) {
    bspline::ControlGrid src = grid;
    if (perm.transpose) {
        bspline::ControlGrid t(grid.cols, grid.rows, grid.closed_u, grid.closed_v);
        for (int p = 0; p < grid.rows; ++p) {
            for (int q = 0; q < grid.cols; ++q) t.at(q, p) = grid.at(p, q);
        }
        src = std::move(t);
    }
    bspline::ControlGrid out(src.rows, src.cols, src.closed_u, src.closed_v);
    for (int p = 0; p < src.rows; ++p) {
        for (int q = 0; q < src.cols; ++q) {
            out.at(p, q) = src.at(perm.row_map[static_cast<std::size_t>(p)],
                                  perm.col_map[static_cast<std::size_t>(q)]);
        }
    }
    return out;
}

double control_point_loss(const bspline::ControlGrid& predicted,
                          const bspline::ControlGrid& ground_truth, bool closed) {
    if (predicted.rows != ground_truth.rows || predicted.cols != ground_truth.cols) {
        throw std::invalid_argument("control_point_loss: grid size mismatch");
    }
    const auto perms = permutation_set(ground_truth.rows, ground_truth.cols, closed);
    double best = std::numeric_limits<double>::infinity();
    for (const GridPermutation& perm : perms) {
        const bspline::ControlGrid permuted = apply_permutation(ground_truth, perm);
        double sum = 0.0;
        for (std::size_t i = 0; i < predicted.points.size(); ++i) {
            sum += (predicted.points[i] - permuted.points[i]).squaredNorm();
        }
        best = std::min(best, sum);
    }
    return best / static_cast<double>(predicted.points.size());
}

namespace {

// 5-point Laplacian on a grid of 3D samples; nodes without a full stencil
// (open-direction borders) are flagged invalid.
void grid_laplacian(const std::vector<Vec3>& samples, int nu, int nv, bool wrap_u, bool wrap_v,
                    std::vector<Vec3>& lap, std::vector<char>& valid) {
    lap.assign(samples.size(), Vec3::Zero());
    valid.assign(samples.size(), 0);
    const auto at = [&](int i, int j) -> const Vec3& {
        return samples[static_cast<std::size_t>(i) * nv + j];
    };
    for (int i = 0; i < nu; ++i) {
        const bool u_ok = wrap_u || (i > 0 && i < nu - 1);
        for (int j = 0; j < nv; ++j) {
            const bool v_ok = wrap_v || (j > 0 && j < nv - 1);
            if (!u_ok || !v_ok) continue;
            const int im = (i - 1 + nu) % nu, ip = (i + 1) % nu;
            const int jm = (j - 1 + nv) % nv, jp = (j + 1) % nv;
            const std::size_t idx = static_cast<std::size_t>(i) * nv + j;
            lap[idx] = at(im, j) + at(ip, j) + at(i, jm) + at(i, jp) - 4.0 * at(i, j);
            valid[idx] = 1;
        }
    }
}

}  // namespace

double laplacian_loss(const bspline::BSplinePatch& predicted,
                      const std::vector<Vec3>& ground_truth_samples, int nu, int nv) {
    if (static_cast<int>(ground_truth_samples.size()) != nu * nv) {
        throw std::invalid_argument("laplacian_loss: ground-truth samples are not an nu x nv grid");
    }
    const auto pred_uv = bspline::sample_uniform(predicted, nu, nv);
    std::vector<Vec3> pred(pred_uv.size());
    for (std::size_t i = 0; i < pred_uv.size(); ++i) pred[i] = pred_uv[i].position;

    const bool wrap_u = predicted.grid.closed_u;
    const bool wrap_v = predicted.grid.closed_v;
    std::vector<Vec3> lap_pred, lap_gt;
    std::vector<char> ok_pred, ok_gt;
    grid_laplacian(pred, nu, nv, wrap_u, wrap_v, lap_pred, ok_pred);
    grid_laplacian(ground_truth_samples, nu, nv, wrap_u, wrap_v, lap_gt, ok_gt);

    Eigen::MatrixXd costs(static_cast<Eigen::Index>(pred.size()),
                          static_cast<Eigen::Index>(ground_truth_samples.size()));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = 0; j < ground_truth_samples.size(); ++j) {
            costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (pred[i] - ground_truth_samples[j]).squaredNorm();
        }
    }
    const auto matching = assignment::solve_assignment(costs);

    double sum = 0.0;
    int counted = 0;
    for (const auto& [i, j] : matching.pairs) {
        if (!ok_pred[static_cast<std::size_t>(i)] || !ok_gt[static_cast<std::size_t>(j)]) continue;
        sum += (lap_pred[static_cast<std::size_t>(i)] - lap_gt[static_cast<std::size_t>(j)])
                   .squaredNorm();
        ++counted;
    }
    if (counted == 0) throw FitError("laplacian_loss: no interior matched pairs");
    return sum / static_cast<double>(counted);
}

double patch_distance_loss(const std::vector<primitives::PrimitivePatch>& patches,
                           const std::vector<std::vector<Vec3>>& samples_per_patch,
                           int spline_samples) {
    if (patches.empty()) throw std::invalid_argument("patch_distance_loss: empty patch list");
    if (patches.size() != samples_per_patch.size()) {
        throw std::invalid_argument("patch_distance_loss: patch/sample count mismatch");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < patches.size(); ++k) {
        if (samples_per_patch[k].empty()) {
            throw std::invalid_argument("patch_distance_loss: empty sample set");
        }
        const primitives::DistanceEvaluator dist(patches[k], spline_samples);
        double sum = 0.0;
        for (const Vec3& p : samples_per_patch[k]) {
            const double d = dist(p);
            sum += d * d;
        }
        total += sum / static_cast<double>(samples_per_patch[k].size());
    }
    return total / static_cast<double>(patches.size());
}

}  // namespace parsefit::losses
