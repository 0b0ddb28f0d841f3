#include "parsefit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "parsefit/bspline.hpp"
#include "parsefit/embedding.hpp"
#include "parsefit/postprocess.hpp"

namespace parsefit::pipeline {

namespace {

using primitives::PrimitiveKind;
using primitives::PrimitivePatch;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// true degrees of freedom per kind
int parameter_count(PrimitiveKind kind, int grid_points) {
    switch (kind) {
        case PrimitiveKind::plane: return 3;
        case PrimitiveKind::sphere: return 4;
        case PrimitiveKind::cylinder: return 5;
        case PrimitiveKind::cone: return 6;
        default: return 3 * grid_points;
    }
}

double mean_distance(const PrimitivePatch& patch, std::span<const Vec3> points,
                     int spline_samples) {
    const primitives::DistanceEvaluator dist(patch, spline_samples);
    double sum = 0.0;
    for (const Vec3& p : points) sum += dist(p);
    return sum / static_cast<double>(points.size());
}

double segment_diagonal(std::span<const Vec3> points) {
    Vec3 lo = points[0], hi = points[0];
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

struct SplineFit {
    bspline::BSplinePatch patch;
    double mean_residual = 0.0;
    int grid = 0;
};

SplineFit fit_open_spline(std::span<const Vec3> points, const PipelineConfig& config) {
    const auto uv = bspline::init_parametrization({points.begin(), points.end()});
    // shrink the grid when the segment cannot determine the full resolution
    int grid = std::min(config.spline_grid,
                        std::max(4, static_cast<int>(std::sqrt(points.size() / 2.0))));
    std::vector<bspline::UVSample> samples(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) samples[i] = {uv[i], points[i]};
    SplineFit fit;
    // segments with round supports leave corner spans empty; retry coarser
    while (true) {
        try {
            fit.patch =
                bspline::make_patch(bspline::fit_control_grid(samples, grid, grid, false, false));
            fit.grid = grid;
            break;
        } catch (const FitError&) {
            if (grid <= 4) throw;
            grid = std::max(4, grid / 2);
        }
    }
    double sum = 0.0;
    for (const auto& s : samples) {
        sum += (bspline::evaluate(fit.patch, s.uv.x(), s.uv.y()) - s.position).norm();
    }
    fit.mean_residual = sum / static_cast<double>(samples.size());
    return fit;
}

bool seam_is_closed(const bspline::BSplinePatch& patch, bool u_direction, double diagonal,
                    double fraction) {
    double gap = 0.0;
    const int probes = 17;
    for (int i = 0; i < probes; ++i) {
        const double t = i / double(probes - 1);
        const Vec3 a = u_direction ? bspline::evaluate(patch, 0.0, t)
                                   : bspline::evaluate(patch, t, 0.0);
        const Vec3 b = u_direction ? bspline::evaluate(patch, 1.0, t)
                                   : bspline::evaluate(patch, t, 1.0);
        gap += (a - b).norm();
    }
    gap /= probes;
    return gap < fraction * diagonal;
}

}  // namespace

void PipelineConfig::validate() const {
    if (embedding_source != "geometric" && embedding_source != "file") {
        throw std::invalid_argument("config: embedding_source must be geometric|file");
    }
    if (embedding_source == "file" && embedding_file.empty()) {
        throw std::invalid_argument("config: embedding_file required for file source");
    }
    if (bandwidth_rank < 1 || mean_shift_iterations < 1 || min_segment_size < 1 ||
        spline_grid < 4 || refine_min_grid < 4 || refine_max_grid < refine_min_grid ||
        cd_samples_per_shape < 1 || spline_distance_samples < 1 || arap_iterations < 1) {
        throw std::invalid_argument("config: counts must be positive (grids >= 4)");
    }
    if (!(refine_tolerance > 0.0) || !(standardize_cd_threshold > 0.0) ||
        !(mean_shift_tolerance > 0.0) || !(bandwidth_floor > 0.0)) {
        throw std::invalid_argument("config: tolerances must be > 0");
    }
}

primitives::PrimitiveKind classify_segment(
    std::span<const Vec3> points, std::span<const Vec3> normals,
    const std::vector<primitives::PrimitiveKind>& provided_labels, const PipelineConfig& config) {
    if (points.empty()) throw std::invalid_argument("classify_segment: empty segment");

    if (!provided_labels.empty()) {
        if (provided_labels.size() != points.size()) {
            throw std::invalid_argument("classify_segment: label count mismatch");
        }
        std::map<PrimitiveKind, std::size_t> votes;
        for (PrimitiveKind k : provided_labels) ++votes[k];
        PrimitiveKind best = provided_labels[0];
        std::size_t best_votes = 0;
        for (const auto& [kind, count] : votes) {  // map order = fixed kind order
            if (count > best_votes) {
                best = kind;
                best_votes = count;
            }
        }
        return best;
    }

    double best_score = std::numeric_limits<double>::infinity();
    PrimitiveKind best_kind = PrimitiveKind::plane;
    bool any = false;
    for (PrimitiveKind kind : {PrimitiveKind::plane, PrimitiveKind::sphere,
                               PrimitiveKind::cylinder, PrimitiveKind::cone}) {
        try {
            const PrimitivePatch fit = primitives::fit_primitive(kind, points, normals);
            const double score = mean_distance(fit, points, config.spline_distance_samples) +
                                 config.classify_lambda * parameter_count(kind, 0);
            if (score < best_score) {
                best_score = score;
                best_kind = kind;
                any = true;
            }
        } catch (const FitError&) {
        }
    }

    try {
        const SplineFit spline = fit_open_spline(points, config);
        const double score =
            spline.mean_residual +
            config.classify_lambda * parameter_count(PrimitiveKind::open_bspline,
                                                     spline.grid * spline.grid);
        if (score < best_score) {
            const double diag = segment_diagonal(points);
            const bool closed =
                seam_is_closed(spline.patch, true, diag, config.closed_seam_fraction) ||
                seam_is_closed(spline.patch, false, diag, config.closed_seam_fraction);
            return closed ? PrimitiveKind::closed_bspline : PrimitiveKind::open_bspline;
        }
        any = true;
    } catch (const FitError&) {
    }
    if (!any) throw FitError("classify_segment: no candidate kind could be fit");
    return best_kind;
}

namespace {

PointCloud normalized_copy(const PointCloud& cloud) {
    PointCloud out = cloud;
    Vec3 lo = cloud.positions[0], hi = cloud.positions[0];
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : cloud.positions) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
        centroid += p;
    }
    centroid /= static_cast<double>(cloud.size());
    const double scale = std::max((hi - lo).maxCoeff(), 1e-12);
    for (Vec3& p : out.positions) p = (p - centroid) / scale;
    return out;
}

struct SegmentFit {
    PrimitivePatch patch;
    PrimitiveKind kind = PrimitiveKind::plane;
    bool ok = false;
    std::string warning;
};

SegmentFit fit_segment(std::span<const Vec3> points, std::span<const Vec3> normals,
                       const PipelineConfig& config) {
    SegmentFit out;
    try {
        out.kind = classify_segment(points, normals, {}, config);
    } catch (const FitError& e) {
        out.warning = e.what();
        return out;
    }
    try {
        if (out.kind == PrimitiveKind::open_bspline || out.kind == PrimitiveKind::closed_bspline) {
            const bool closed_u = out.kind == PrimitiveKind::closed_bspline;
            const auto uv = bspline::init_parametrization({points.begin(), points.end()});
            std::vector<bspline::UVSample> samples(points.size());
            for (std::size_t i = 0; i < points.size(); ++i) samples[i] = {uv[i], points[i]};
            int grid = config.spline_grid;
            bspline::StandardizeResult standardized;
            while (true) {
                try {
                    standardized = bspline::standardize_patch(
                        samples, closed_u, false, config.standardize_cd_threshold, grid);
                    break;
                } catch (const FitError&) {
                    if (grid <= 4) throw;
                    grid = std::max(4, grid / 2);
                }
            }
            bspline::BSplinePatch patch = std::move(standardized.patch);
            double chamfer = standardized.chamfer;
            const std::vector<Vec3> pts(points.begin(), points.end());
            if (config.arap) {
                auto covered = postprocess::optimize_coverage(patch, points, config.arap_iterations,
                                                              config.match_max_points);
                const double cd = bspline::patch_chamfer(covered, pts, 40, 40);
                if (cd <= chamfer) {
                    patch = std::move(covered);
                    chamfer = cd;
                }
            }
            if (config.refine) {
                postprocess::FitToleranceConfig rc;
                rc.tolerance = config.refine_tolerance;
                rc.min_grid = config.refine_min_grid;
                rc.max_grid = config.refine_max_grid;
                rc.match_max_points = config.match_max_points;
                auto refined = postprocess::refine_to_tolerance(patch, points, rc);
                if (refined.success && refined.chamfer <= chamfer) {
                    patch = std::move(refined.patch);
                }
            }
            out.patch = {out.kind, std::move(patch)};
        } else {
            out.patch = primitives::fit_primitive(out.kind, points, normals);
        }
        out.ok = true;
        return out;
    } catch (const FitError& e) {
        out.warning = e.what();
    }
    // downgrade: best basic primitive by mean distance
    double best = std::numeric_limits<double>::infinity();
    for (PrimitiveKind kind : {PrimitiveKind::plane, PrimitiveKind::sphere,
                               PrimitiveKind::cylinder, PrimitiveKind::cone}) {
        try {
            PrimitivePatch fit = primitives::fit_primitive(kind, points, normals);
            const double score = mean_distance(fit, points, config.spline_distance_samples);
            if (score < best) {
                best = score;
                out.patch = std::move(fit);
                out.kind = kind;
                out.ok = true;
            }
        } catch (const FitError&) {
        }
    }
    return out;
}

}  // namespace

DecomposeResult decompose(const PointCloud& cloud, const PipelineConfig& config) {
    config.validate();
    if (cloud.size() == 0) throw std::invalid_argument("decompose: empty cloud");
    for (const Vec3& p : cloud.positions) {
        if (!p.allFinite()) throw std::invalid_argument("decompose: non-finite position");
    }
    DecomposeResult result;
    result.patch_set.seed = config.seed;

    if (cloud.size() == 1) {
        result.clusters.centers = Eigen::MatrixXd::Zero(1, 1);
        result.clusters.hard_labels = Eigen::VectorXi::Zero(1);
        result.clusters.membership = Eigen::MatrixXd::Ones(1, 1);
        result.soft_membership = Eigen::MatrixXd::Ones(1, 1);
        result.warnings.push_back("single-point cloud: segment too small to classify");
        return result;
    }

    auto t0 = std::chrono::steady_clock::now();
    embedding::EmbeddingMatrix rows;
    if (config.embedding_source == "geometric") {
        rows = embedding::geometric_embedding(normalized_copy(cloud), config.scale_position,
                                              config.scale_normal);
    } else {
        rows = embedding::load_embeddings(config.embedding_file);
        if (rows.rows() != static_cast<Eigen::Index>(cloud.size())) {
            throw std::invalid_argument("decompose: embedding row count != point count");
        }
    }
    result.timings_seconds.emplace_back("embedding", seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    const auto beta =
        clustering::estimate_bandwidth(rows, config.bandwidth_rank, config.bandwidth_floor);
    result.timings_seconds.emplace_back("bandwidth", seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    const auto shifted = clustering::mean_shift(rows, beta, config.mean_shift_iterations,
                                                config.mean_shift_tolerance);
    result.timings_seconds.emplace_back("mean_shift", seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    auto clusters = clustering::extract_clusters(shifted.modes, rows, beta, shifted.iterations);

    // fold clusters below the size floor into their nearest larger cluster
    const int n = static_cast<int>(cloud.size());
    const int k_all = static_cast<int>(clusters.centers.rows());
    std::vector<int> sizes(static_cast<std::size_t>(k_all), 0);
    for (int i = 0; i < n; ++i) ++sizes[static_cast<std::size_t>(clusters.hard_labels[i])];
    std::vector<int> keep;
    for (int k = 0; k < k_all; ++k) {
        if (sizes[static_cast<std::size_t>(k)] >= config.min_segment_size) keep.push_back(k);
    }
    if (keep.empty()) {
        keep.resize(static_cast<std::size_t>(k_all));
        std::iota(keep.begin(), keep.end(), 0);
        result.warnings.push_back("all clusters below the size floor; keeping them as-is");
    }
    if (static_cast<int>(keep.size()) < k_all) {
        result.warnings.push_back(std::to_string(k_all - static_cast<int>(keep.size())) +
                                  " undersized cluster(s) merged into larger neighbors");
        Eigen::MatrixXd centers(static_cast<Eigen::Index>(keep.size()), clusters.centers.cols());
        for (std::size_t j = 0; j < keep.size(); ++j) {
            centers.row(static_cast<Eigen::Index>(j)) = clusters.centers.row(keep[j]);
        }
        std::vector<int> remap(static_cast<std::size_t>(k_all), -1);
        for (std::size_t j = 0; j < keep.size(); ++j) remap[static_cast<std::size_t>(keep[j])] = static_cast<int>(j);
        Eigen::VectorXi labels(n);
        const Eigen::MatrixXd affinity = shifted.modes * centers.transpose();
        for (int i = 0; i < n; ++i) {
            const int old = clusters.hard_labels[i];
            if (remap[static_cast<std::size_t>(old)] >= 0) {
                labels[i] = remap[static_cast<std::size_t>(old)];
            } else {
                int best = 0;
                affinity.row(i).maxCoeff(&best);
                labels[i] = best;
            }
        }
        clusters.centers = std::move(centers);
        clusters.hard_labels = std::move(labels);
        clusters.membership =
            Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(keep.size()));
        for (int i = 0; i < n; ++i) clusters.membership(i, clusters.hard_labels[i]) = 1.0;
    }
    result.soft_membership = clustering::soft_membership(shifted.modes, clusters.centers, beta);
    result.timings_seconds.emplace_back("clusters", seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    const int k = static_cast<int>(clusters.centers.rows());
    std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
    for (int i = 0; i < n; ++i) {
        members[static_cast<std::size_t>(clusters.hard_labels[i])].push_back(i);
    }

    std::vector<SegmentFit> fits(static_cast<std::size_t>(k));
#pragma omp parallel for schedule(dynamic, 1)
    for (int seg = 0; seg < k; ++seg) {
        const auto& ids = members[static_cast<std::size_t>(seg)];
        std::vector<Vec3> pts, nrm;
        pts.reserve(ids.size());
        for (int i : ids) pts.push_back(cloud.positions[static_cast<std::size_t>(i)]);
        if (cloud.has_normals()) {
            nrm.reserve(ids.size());
            for (int i : ids) nrm.push_back(cloud.normals[static_cast<std::size_t>(i)]);
        }
        fits[static_cast<std::size_t>(seg)] = fit_segment(pts, nrm, config);
    }

    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return members[static_cast<std::size_t>(a)].size() >
               members[static_cast<std::size_t>(b)].size();
    });
    for (int seg : order) {
        SegmentFit& fit = fits[static_cast<std::size_t>(seg)];
        if (!fit.warning.empty()) {
            result.warnings.push_back("segment " + std::to_string(seg) + ": " + fit.warning);
        }
        if (!fit.ok) continue;
        result.patch_set.patches.push_back(
            {std::move(fit.patch), members[static_cast<std::size_t>(seg)], fit.kind});
    }
    result.clusters = std::move(clusters);
    result.timings_seconds.emplace_back("fitting", seconds_since(t0));
    return result;
}

}  // namespace parsefit::pipeline
