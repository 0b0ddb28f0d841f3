#include "parsefit/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "parsefit/kernels.hpp"

#include <Eigen/Dense>

namespace parsefit::ransac {

namespace {

using primitives::Cone;
using primitives::Cylinder;
using primitives::Plane;
using primitives::PrimitiveKind;
using primitives::PrimitivePatch;
using primitives::Sphere;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double point_distance(const PrimitivePatch& patch, const Vec3& p) {
    switch (patch.kind) {
        case PrimitiveKind::plane: {
            const auto& pl = std::get<Plane>(patch.shape);
            return std::abs(pl.normal.dot(p) - pl.offset);
        }
        case PrimitiveKind::sphere: {
            const auto& sp = std::get<Sphere>(patch.shape);
            return std::abs((p - sp.center).norm() - sp.radius);
        }
        case PrimitiveKind::cylinder: {
            const auto& cy = std::get<Cylinder>(patch.shape);
            const Vec3 w = p - cy.center;
            return std::abs((w - w.dot(cy.direction) * cy.direction).norm() - cy.radius);
        }
        default: {
            const auto& co = std::get<Cone>(patch.shape);
            const Vec3 w = p - co.apex;
            const double h = w.dot(co.direction);
            const double rho = (w - h * co.direction).norm();
            const double s = std::sin(co.half_angle);
            const double c = std::cos(co.half_angle);
            const double t = rho * s + h * c;
            if (t <= 0.0) return std::sqrt(rho * rho + h * h);
            return std::abs(rho * c - h * s);
        }
    }
}

std::optional<Vec3> surface_normal(const PrimitivePatch& patch, const Vec3& p) {
    switch (patch.kind) {
        case PrimitiveKind::plane: return std::get<Plane>(patch.shape).normal;
        case PrimitiveKind::sphere: {
            const auto& sp = std::get<Sphere>(patch.shape);
            const Vec3 d = p - sp.center;
            const double len = d.norm();
            if (len < 1e-12) return std::nullopt;
            return Vec3(d / len);
        }
        case PrimitiveKind::cylinder: {
            const auto& cy = std::get<Cylinder>(patch.shape);
            const Vec3 w = p - cy.center;
            const Vec3 radial = w - w.dot(cy.direction) * cy.direction;
            const double len = radial.norm();
            if (len < 1e-12) return std::nullopt;
            return Vec3(radial / len);
        }
        default: {
            const auto& co = std::get<Cone>(patch.shape);
            const Vec3 w = p - co.apex;
            const double h = w.dot(co.direction);
            const Vec3 radial = w - h * co.direction;
            const double len = radial.norm();
            if (len < 1e-12) return std::nullopt;
            const Vec3 rhat = radial / len;
            return Vec3(std::cos(co.half_angle) * rhat - std::sin(co.half_angle) * co.direction);
        }
    }
}

std::optional<PrimitivePatch> from_minimal_set(PrimitiveKind kind, const PointCloud& cloud,
                                               const std::vector<int>& ids) {
    const auto p = [&](int k) { return cloud.positions[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])]; };
    const auto n = [&](int k) { return cloud.normals[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])]; };
    switch (kind) {
        case PrimitiveKind::plane: {
            const Vec3 normal = (p(1) - p(0)).cross(p(2) - p(0));
            const double len = normal.norm();
            if (len < 1e-12) return std::nullopt;
            Plane plane;
            plane.normal = normal / len;
            plane.offset = plane.normal.dot(p(0));
            return PrimitivePatch{PrimitiveKind::plane, plane};
        }
        case PrimitiveKind::sphere: {
            Eigen::Matrix3d a;
            Vec3 b;
            for (int k = 1; k < 4; ++k) {
                a.row(k - 1) = 2.0 * (p(k) - p(0)).transpose();
                b[k - 1] = p(k).squaredNorm() - p(0).squaredNorm();
            }
            if (std::abs(a.determinant()) < 1e-12) return std::nullopt;
            Sphere sphere;
            sphere.center = a.partialPivLu().solve(b);
            sphere.radius = (p(0) - sphere.center).norm();
            if (sphere.radius < 1e-9) return std::nullopt;
            return PrimitivePatch{PrimitiveKind::sphere, sphere};
        }
        case PrimitiveKind::cylinder: {
            // axis orthogonal to both normals; center from the 2D crossing
            // of the projected normal lines
            const Vec3 axis_raw = n(0).cross(n(1));
            const double len = axis_raw.norm();
            if (len < 1e-3) return std::nullopt;
            Cylinder cyl;
            cyl.direction = axis_raw / len;
            Vec3 e1 = cyl.direction.unitOrthogonal();
            Vec3 e2 = cyl.direction.cross(e1);
            const auto proj = [&](const Vec3& x) { return Vec2(x.dot(e1), x.dot(e2)); };
            const Vec2 q0 = proj(p(0)), q1 = proj(p(1));
            const Vec2 m0 = proj(n(0)), m1 = proj(n(1));
            const double det = m0.x() * (-m1.y()) - (-m1.x()) * m0.y();
            if (std::abs(det) < 1e-12) return std::nullopt;
            const Vec2 rhs = q1 - q0;
            const double t0 = (rhs.x() * (-m1.y()) - (-m1.x()) * rhs.y()) / det;
            const Vec2 c2 = q0 + t0 * m0;
            cyl.center = c2.x() * e1 + c2.y() * e2;
            cyl.radius = 0.5 * ((q0 - c2).norm() + (q1 - c2).norm());
            if (cyl.radius < 1e-9) return std::nullopt;
            return PrimitivePatch{PrimitiveKind::cylinder, cyl};
        }
        default: {
            // apex: intersection of the three tangent planes
            Eigen::Matrix3d a;
            Vec3 b;
            for (int k = 0; k < 3; ++k) {
                a.row(k) = n(k).transpose();
                b[k] = n(k).dot(p(k));
            }
            if (std::abs(a.determinant()) < 1e-8) return std::nullopt;
            Cone cone;
            cone.apex = a.partialPivLu().solve(b);
            Vec3 u[3];
            for (int k = 0; k < 3; ++k) {
                const Vec3 w = p(k) - cone.apex;
                const double len = w.norm();
                if (len < 1e-9) return std::nullopt;
                u[k] = w / len;
            }
            Vec3 axis = (u[1] - u[0]).cross(u[2] - u[0]);
            const double alen = axis.norm();
            if (alen < 1e-9) return std::nullopt;
            axis /= alen;
            const Vec3 mean_u = (u[0] + u[1] + u[2]) / 3.0;
            if (axis.dot(mean_u) < 0.0) axis = -axis;
            cone.direction = axis;
            double mean_cos = 0.0;
            for (const Vec3& d : u) mean_cos += d.dot(axis);
            cone.half_angle = std::acos(std::clamp(mean_cos / 3.0, -1.0, 1.0));
            if (cone.half_angle < 1e-3 || cone.half_angle > 1.5) return std::nullopt;
            return PrimitivePatch{PrimitiveKind::cone, cone};
        }
    }
}

int count_inliers(const PrimitivePatch& patch, const PointCloud& cloud,
                  const std::vector<int>& remaining, const RansacConfig& config,
                  std::vector<int>* collect) {
    const double cos_tol = std::cos(config.normal_epsilon);
    int count = 0;
    for (int idx : remaining) {
        const Vec3& p = cloud.positions[static_cast<std::size_t>(idx)];
        if (point_distance(patch, p) > config.inlier_epsilon) continue;
        const auto sn = surface_normal(patch, p);
        if (!sn) continue;
        if (std::abs(sn->dot(cloud.normals[static_cast<std::size_t>(idx)])) < cos_tol) continue;
        ++count;
        if (collect) collect->push_back(idx);
    }
    return count;
}

constexpr int kMinimalSize[4] = {3, 4, 2, 3};  // plane, sphere, cylinder, cone
constexpr PrimitiveKind kKinds[4] = {PrimitiveKind::plane, PrimitiveKind::sphere,
                                     PrimitiveKind::cylinder, PrimitiveKind::cone};

// spatial coherence: one unbounded candidate must not collect inliers from
// several disconnected parts of the cloud, so only the link-distance
// component around the sampling seed survives
std::vector<int> seed_component(const PointCloud& cloud, const std::vector<int>& ids, int seed,
                                double link_distance) {
    const double link2 = link_distance * link_distance;
    std::vector<char> visited(ids.size(), 0);
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] == seed) {
            visited[i] = 1;
            queue.push_back(i);
            break;
        }
    }
    if (queue.empty()) return ids;  // seed got filtered out by the refit
    while (!queue.empty()) {
        const std::size_t cur = queue.back();
        queue.pop_back();
        const Vec3& p = cloud.positions[static_cast<std::size_t>(ids[cur])];
        for (std::size_t j = 0; j < ids.size(); ++j) {
            if (visited[j]) continue;
            if ((cloud.positions[static_cast<std::size_t>(ids[j])] - p).squaredNorm() <= link2) {
                visited[j] = 1;
                queue.push_back(j);
            }
        }
    }
    std::vector<int> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (visited[i]) out.push_back(ids[i]);
    }
    return out;
}

}  // namespace

std::vector<Detection> detect_primitives(const PointCloud& cloud, const RansacConfig& config) {
    if (cloud.size() == 0) throw std::invalid_argument("detect_primitives: empty cloud");
    if (!cloud.has_normals()) throw std::invalid_argument("detect_primitives: normals required");
    if (config.min_inliers < 6) throw std::invalid_argument("detect_primitives: min_inliers < 6");
    if (!(config.inlier_epsilon > 0.0)) {
        throw std::invalid_argument("detect_primitives: inlier_epsilon must be > 0");
    }

    std::vector<Detection> best_run;
    std::size_t best_covered = 0;

    // link scale for the coherence filter: a few mean nearest-neighbor hops
    Eigen::MatrixXd positions(static_cast<Eigen::Index>(cloud.size()), 3);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        positions.row(static_cast<Eigen::Index>(i)) = cloud.positions[i].transpose();
    }
    const double link_distance =
        cloud.size() > 1 ? 3.0 * kernels::rank_neighbor_distance(positions, 1).mean()
                         : config.inlier_epsilon;

    for (int restart = 0; restart < config.restarts; ++restart) {
        std::vector<int> remaining(cloud.size());
        std::iota(remaining.begin(), remaining.end(), 0);
        std::vector<Detection> run;
        int strikes = 0;

        for (int round = 0; static_cast<int>(remaining.size()) >= config.min_inliers; ++round) {
            int best_count = 0;
            int best_candidate = -1;
            int best_seed = -1;
            PrimitivePatch best_patch;

#pragma omp parallel
            {
                int local_count = 0;
                int local_candidate = -1;
                int local_seed = -1;
                PrimitivePatch local_patch;
#pragma omp for schedule(dynamic, 16)
                for (int c = 0; c < config.max_candidates_per_round; ++c) {
                    std::mt19937_64 rng(splitmix64(config.seed ^ splitmix64(
                                                       (static_cast<std::uint64_t>(restart) << 40) ^
                                                       (static_cast<std::uint64_t>(round) << 20) ^
                                                       static_cast<std::uint64_t>(c))));
                    const PrimitiveKind kind = kKinds[c % 4];
                    const int need = kMinimalSize[c % 4];

                    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
                    const int first = remaining[pick(rng)];
                    // localized sampling: companions from the neighborhood
                    // of the first draw
                    std::vector<int> ids = {first};
                    if (need > 1) {
                        std::vector<std::pair<double, int>> near;
                        near.reserve(remaining.size());
                        for (int idx : remaining) {
                            if (idx == first) continue;
                            near.emplace_back(
                                (cloud.positions[static_cast<std::size_t>(idx)] -
                                 cloud.positions[static_cast<std::size_t>(first)])
                                    .squaredNorm(),
                                idx);
                        }
                        const std::size_t pool =
                            std::min<std::size_t>(config.neighborhood, near.size());
                        if (pool < static_cast<std::size_t>(need - 1)) continue;
                        std::nth_element(near.begin(), near.begin() + (pool - 1), near.end());
                        std::uniform_int_distribution<std::size_t> pick_near(0, pool - 1);
                        while (static_cast<int>(ids.size()) < need) {
                            const int cand = near[pick_near(rng)].second;
                            if (std::find(ids.begin(), ids.end(), cand) == ids.end()) {
                                ids.push_back(cand);
                            }
                        }
                    }
                    const auto patch = from_minimal_set(kind, cloud, ids);
                    if (!patch) continue;
                    const int inliers = count_inliers(*patch, cloud, remaining, config, nullptr);
                    if (inliers > local_count ||
                        (inliers == local_count && local_candidate >= 0 && c < local_candidate)) {
                        local_count = inliers;
                        local_candidate = c;
                        local_seed = first;
                        local_patch = *patch;
                    }
                }
#pragma omp critical
                {
                    if (local_count > best_count ||
                        (local_count == best_count && local_candidate >= 0 &&
                         (best_candidate < 0 || local_candidate < best_candidate))) {
                        best_count = local_count;
                        best_candidate = local_candidate;
                        best_seed = local_seed;
                        best_patch = local_patch;
                    }
                }
            }

            if (best_count < config.min_inliers) break;

            std::vector<int> inlier_ids;
            count_inliers(best_patch, cloud, remaining, config, &inlier_ids);
            inlier_ids = seed_component(cloud, inlier_ids, best_seed, link_distance);
            if (static_cast<int>(inlier_ids.size()) < config.min_inliers) {
                if (++strikes >= 3) break;
                continue;
            }
            // alternate least-squares refit and consensus until stable
            PrimitivePatch refit = best_patch;
            std::vector<int> refit_ids = inlier_ids;
            for (int pass = 0; pass < 4; ++pass) {
                std::vector<Vec3> fit_pts, fit_nrm;
                fit_pts.reserve(refit_ids.size());
                fit_nrm.reserve(refit_ids.size());
                for (int idx : refit_ids) {
                    fit_pts.push_back(cloud.positions[static_cast<std::size_t>(idx)]);
                    fit_nrm.push_back(cloud.normals[static_cast<std::size_t>(idx)]);
                }
                try {
                    refit = primitives::fit_primitive(refit.kind, fit_pts, fit_nrm);
                } catch (const FitError&) {
                    break;  // keep the previous estimate
                }
                std::vector<int> next_ids;
                count_inliers(refit, cloud, remaining, config, &next_ids);
                next_ids = seed_component(cloud, next_ids, best_seed, link_distance);
                std::sort(next_ids.begin(), next_ids.end());
                const bool stable = next_ids == refit_ids;
                refit_ids = std::move(next_ids);
                if (stable) break;
            }
            if (static_cast<int>(refit_ids.size()) < config.min_inliers) {
                if (++strikes >= 3) break;
                continue;
            }
            strikes = 0;
            run.push_back({refit, refit_ids});
            std::vector<int> next;
            next.reserve(remaining.size() - refit_ids.size());
            std::set_difference(remaining.begin(), remaining.end(), refit_ids.begin(),
                                refit_ids.end(), std::back_inserter(next));
            remaining.swap(next);
        }

        std::size_t covered = 0;
        for (const auto& d : run) covered += d.inlier_indices.size();
        if (covered > best_covered) {
            best_covered = covered;
            best_run = std::move(run);
        }
    }
    return best_run;
}

}  // namespace parsefit::ransac
