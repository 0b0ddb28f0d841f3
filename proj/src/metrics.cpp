#include "parsefit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "parsefit/assignment.hpp"
#include "parsefit/kernels.hpp"

namespace parsefit::metrics {

SegmentLabeling SegmentLabeling::from_labels(std::vector<int> labels,
                                             std::vector<primitives::PrimitiveKind> types) {
    SegmentLabeling out;
    out.segment_count = 0;
    for (int l : labels) {
        if (l < -1) throw std::invalid_argument("SegmentLabeling: invalid label");
        out.segment_count = std::max(out.segment_count, l + 1);
    }
    if (!types.empty() && static_cast<int>(types.size()) < out.segment_count) {
        throw std::invalid_argument("SegmentLabeling: fewer types than segments");
    }
    if (!types.empty() && static_cast<int>(types.size()) > out.segment_count) {
        out.segment_count = static_cast<int>(types.size());
    }
    out.labels = std::move(labels);
    out.types = std::move(types);
    return out;
}

namespace {

Eigen::MatrixXd iou_matrix(const SegmentLabeling& predicted, const SegmentLabeling& truth) {
    if (predicted.labels.size() != truth.labels.size()) {
        throw std::invalid_argument("metrics: labelings cover different point counts");
    }
    const int kp = predicted.segment_count;
    const int kt = truth.segment_count;
    Eigen::MatrixXd inter = Eigen::MatrixXd::Zero(kp, kt);
    Eigen::VectorXd size_p = Eigen::VectorXd::Zero(kp);
    Eigen::VectorXd size_t_ = Eigen::VectorXd::Zero(kt);
    for (std::size_t i = 0; i < predicted.labels.size(); ++i) {
        const int a = predicted.labels[i];  // -1: point in no predicted segment
        const int b = truth.labels[i];
        if (b < 0) throw std::invalid_argument("metrics: ground truth must cover every point");
        if (a >= 0) {
            inter(a, b) += 1.0;
            size_p[a] += 1.0;
        }
        size_t_[b] += 1.0;
    }
    Eigen::MatrixXd iou(kp, kt);
    for (int a = 0; a < kp; ++a) {
        for (int b = 0; b < kt; ++b) {
            const double uni = size_p[a] + size_t_[b] - inter(a, b);
            iou(a, b) = uni > 0.0 ? inter(a, b) / uni : 0.0;
        }
    }
    return iou;
}

}  // namespace

std::vector<std::pair<int, int>> match_segments(const SegmentLabeling& predicted,
                                                const SegmentLabeling& truth) {
    const Eigen::MatrixXd iou = iou_matrix(predicted, truth);
    const Eigen::MatrixXd costs = Eigen::MatrixXd::Ones(iou.rows(), iou.cols()) - iou;
    return assignment::solve_assignment(costs).pairs;
}

double seg_miou(const SegmentLabeling& predicted, const SegmentLabeling& truth) {
    const Eigen::MatrixXd iou = iou_matrix(predicted, truth);
    const auto pairs = match_segments(predicted, truth);
    double sum = 0.0;
    for (const auto& [p, t] : pairs) sum += iou(p, t);
    return sum / static_cast<double>(truth.segment_count);
}

double label_miou(const SegmentLabeling& predicted, const SegmentLabeling& truth) {
    if (predicted.types.empty() || truth.types.empty()) {
        throw std::invalid_argument("label_miou: missing segment types");
    }
    const auto pairs = match_segments(predicted, truth);
    double sum = 0.0;
    for (const auto& [p, t] : pairs) {
        if (predicted.types[static_cast<std::size_t>(p)] ==
            truth.types[static_cast<std::size_t>(t)]) {
            sum += 1.0;
        }
    }
    return sum / static_cast<double>(truth.segment_count);
}

double residual_error(const std::vector<primitives::PrimitivePatch>& predicted_patches,
                      const std::vector<std::vector<Vec3>>& truth_segment_samples,
                      const std::vector<std::pair<int, int>>& matched_pairs, int spline_samples) {
    if (matched_pairs.empty()) throw std::invalid_argument("residual_error: no matched pairs");
    double total = 0.0;
    for (const auto& [p, t] : matched_pairs) {
        const auto& samples = truth_segment_samples[static_cast<std::size_t>(t)];
        if (samples.empty()) throw std::invalid_argument("residual_error: empty sample set");
        const primitives::DistanceEvaluator dist(predicted_patches[static_cast<std::size_t>(p)],
                                                 spline_samples);
        double sum = 0.0;
        for (const Vec3& r : samples) sum += dist(r);
        total += sum / static_cast<double>(samples.size());
    }
    return total / static_cast<double>(matched_pairs.size());
}

double p_coverage(const std::vector<Vec3>& input_points,
                  const std::vector<primitives::PrimitivePatch>& patches, double epsilon,
                  int spline_samples) {
    if (input_points.empty() || patches.empty()) {
        throw std::invalid_argument("p_coverage: empty input");
    }
    std::vector<primitives::DistanceEvaluator> dists;
    dists.reserve(patches.size());
    for (const auto& patch : patches) dists.emplace_back(patch, spline_samples);
    std::int64_t covered = 0;
#pragma omp parallel for schedule(static) reduction(+ : covered)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(input_points.size()); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& dist : dists) {
            best = std::min(best, dist(input_points[static_cast<std::size_t>(i)]));
        }
        if (best < epsilon) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(input_points.size());
}

ChamferResult chamfer_distance(const std::vector<Vec3>& reconstructed,
                               const std::vector<Vec3>& input) {
    if (reconstructed.empty() || input.empty()) {
        throw std::invalid_argument("chamfer_distance: empty point set");
    }
    ChamferResult out;
    out.p_cover = kernels::min_sq_dist(reconstructed, input).mean();
    out.s_cover = kernels::min_sq_dist(input, reconstructed).mean();
    out.chamfer = 0.5 * (out.p_cover + out.s_cover);
    return out;
}

std::vector<Vec3> reconstruct_samples(const std::vector<primitives::PrimitivePatch>& patches,
                                      const std::vector<std::vector<Vec3>>& segments,
                                      int total_samples, double trim_epsilon, std::uint64_t seed) {
    if (patches.size() != segments.size()) {
        throw std::invalid_argument("reconstruct_samples: patch/segment count mismatch");
    }
    std::size_t total_points = 0;
    for (const auto& s : segments) total_points += s.size();
    if (total_points == 0) throw std::invalid_argument("reconstruct_samples: empty segments");

    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(total_samples));
    for (std::size_t k = 0; k < patches.size(); ++k) {
        if (segments[k].empty()) continue;
        const int count = std::max(
            1, static_cast<int>(std::llround(static_cast<double>(total_samples) *
                                             static_cast<double>(segments[k].size()) /
                                             static_cast<double>(total_points))));
        std::mt19937_64 rng(seed + k);
        const auto samples = primitives::sample_surface(patches[k], segments[k], count, rng);
        const auto mask = primitives::trim_inlier_mask(segments[k], samples, trim_epsilon);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (mask[i]) out.push_back(samples[i]);
        }
    }
    return out;
}

}  // namespace parsefit::metrics
