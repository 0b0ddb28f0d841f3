#include "parsefit/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "parsefit/kernels.hpp"

namespace parsefit::primitives {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAngleFloor = 1e-4;
constexpr int kMaxRefineIterations = 100;
constexpr double kGradientStop = 1e-10;

Vec3 canonical_sign(const Vec3& d) {
    int axis = 0;
    d.cwiseAbs().maxCoeff(&axis);
    return d[axis] < 0.0 ? Vec3(-d) : d;
}

void orthobasis(const Vec3& a, Vec3& e1, Vec3& e2) {
    e1 = std::abs(a.x()) > 0.9 ? Vec3::UnitY().cross(a) : Vec3::UnitX().cross(a);
    e1.normalize();
    e2 = a.cross(e1);
}

Vec3 centroid_of(std::span<const Vec3> points) {
    Vec3 c = Vec3::Zero();
    for (const Vec3& p : points) c += p;
    return c / static_cast<double>(points.size());
}

Mat3 scatter_about(std::span<const Vec3> points, const Vec3& center) {
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : points) {
        const Vec3 d = p - center;
        cov += d * d.transpose();
    }
    return cov;
}

void check_spread(std::span<const Vec3> points) {
    const Vec3 c = centroid_of(points);
    double spread = 0.0;
    for (const Vec3& p : points) spread = std::max(spread, (p - c).squaredNorm());
    if (spread < 1e-24) throw FitError("fit_primitive: all points coincident");
}

double cone_signed_distance(const Vec3& p, const Cone& cone) {
    const Vec3 w = p - cone.apex;
    const double h = w.dot(cone.direction);
    const double rho = (w - h * cone.direction).norm();
    const double s = std::sin(cone.half_angle);
    const double c = std::cos(cone.half_angle);
    const double t = rho * s + h * c;  // arc length along the generator
    if (t <= 0.0) return std::sqrt(rho * rho + h * h);
    return rho * c - h * s;
}

double sum_sq(const Eigen::VectorXd& r) { return r.squaredNorm(); }

// Levenberg-style acceptance loop shared by the nonlinear fits: only steps
// that lower the sum of squares are taken, so refinement never regresses
// below its initialization.
template <typename Residuals, typename ApplyStep>
void refine_lm(Residuals&& residuals, ApplyStep&& apply_step) {
    double lambda = 1e-6;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residuals(r, &jac);
    double sse = sum_sq(r);
    for (int iter = 0; iter < kMaxRefineIterations; ++iter) {
        const Eigen::VectorXd grad = jac.transpose() * r;
        if (grad.lpNorm<Eigen::Infinity>() < kGradientStop) break;
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal().array() += lambda * (jtj.diagonal().array().abs() + 1e-12);
            const Eigen::VectorXd delta = damped.ldlt().solve(-grad);
            apply_step(delta, false);
            Eigen::VectorXd r_trial;
            residuals(r_trial, nullptr);
            if (sum_sq(r_trial) <= sse) {
                apply_step(delta, true);  // commit
                residuals(r, &jac);
                sse = sum_sq(r);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) break;
    }
}

}  // namespace

std::string_view kind_name(PrimitiveKind kind) {
    switch (kind) {
        case PrimitiveKind::plane: return "plane";
        case PrimitiveKind::sphere: return "sphere";
        case PrimitiveKind::cylinder: return "cylinder";
        case PrimitiveKind::cone: return "cone";
        case PrimitiveKind::open_bspline: return "open_bspline";
        case PrimitiveKind::closed_bspline: return "closed_bspline";
    }
    return "plane";
}

PrimitiveKind kind_from_name(std::string_view name) {
    if (name == "plane") return PrimitiveKind::plane;
    if (name == "sphere") return PrimitiveKind::sphere;
    if (name == "cylinder") return PrimitiveKind::cylinder;
    if (name == "cone") return PrimitiveKind::cone;
    if (name == "open_bspline") return PrimitiveKind::open_bspline;
    if (name == "closed_bspline") return PrimitiveKind::closed_bspline;
    throw std::invalid_argument("unknown primitive kind: " + std::string(name));
}

PrimitivePatch fit_plane(std::span<const Vec3> points) {
    if (points.size() < 3) throw FitError("fit_plane: need at least 3 points");
    check_spread(points);
    const Vec3 c = centroid_of(points);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter_about(points, c));
    const Vec3 evals = eig.eigenvalues();
    if (evals[1] <= 1e-14 * std::max(evals[2], 1e-300)) {
        throw FitError("fit_plane: collinear points");
    }
    Plane plane;
    plane.normal = canonical_sign(eig.eigenvectors().col(0).normalized());
    plane.offset = plane.normal.dot(c);
    return {PrimitiveKind::plane, plane};
}

PrimitivePatch fit_sphere(std::span<const Vec3> points) {
    if (points.size() < 4) throw FitError("fit_sphere: need at least 4 points");
    check_spread(points);
    // algebraic solve: 2 c.p + (r^2 - |c|^2) = |p|^2, linear in (c, k)
    Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
    Eigen::Vector4d atb = Eigen::Vector4d::Zero();
    for (const Vec3& p : points) {
        Eigen::Vector4d row(2.0 * p.x(), 2.0 * p.y(), 2.0 * p.z(), 1.0);
        ata += row * row.transpose();
        atb += row * p.squaredNorm();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> cond(ata);
    if (cond.eigenvalues()[0] <= 1e-12 * std::max(cond.eigenvalues()[3], 1e-300)) {
        throw FitError("fit_sphere: degenerate configuration");
    }
    const Eigen::Vector4d sol = ata.ldlt().solve(atb);
    Sphere sphere;
    sphere.center = sol.head<3>();
    const double r2 = sol[3] + sphere.center.squaredNorm();
    if (!(r2 > 0.0)) throw FitError("fit_sphere: non-positive squared radius");
    sphere.radius = std::sqrt(r2);

    const auto residuals = [&](Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(static_cast<Eigen::Index>(points.size()));
        if (jac) jac->resize(static_cast<Eigen::Index>(points.size()), 4);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const Vec3 d = points[i] - sphere.center;
            const double len = d.norm();
            r[static_cast<Eigen::Index>(i)] = len - sphere.radius;
            if (jac) {
                const Vec3 dir = len > 1e-300 ? Vec3(d / len) : Vec3::UnitX();
                jac->row(static_cast<Eigen::Index>(i)) << -dir.x(), -dir.y(), -dir.z(), -1.0;
            }
        }
    };
    Sphere saved = sphere;
    const auto apply = [&](const Eigen::VectorXd& delta, bool commit) {
        sphere.center = saved.center + delta.head<3>();
        sphere.radius = std::max(saved.radius + delta[3], 1e-12);
        if (commit) saved = sphere;
    };
    refine_lm(residuals, apply);
    sphere = saved;
    return {PrimitiveKind::sphere, sphere};
}

namespace {

Vec3 axis_from_normals(std::span<const Vec3> normals) {
    Mat3 cov = Mat3::Zero();
    for (const Vec3& n : normals) cov += n * n.transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    return eig.eigenvectors().col(0).normalized();
}

// Without normals the axis is ambiguous from second moments alone, so all
// three principal directions are tried and the best refined fit wins.
std::vector<Vec3> principal_directions(std::span<const Vec3> points) {
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter_about(points, centroid_of(points)));
    return {eig.eigenvectors().col(0).normalized(), eig.eigenvectors().col(1).normalized(),
            eig.eigenvectors().col(2).normalized()};
}

}  // namespace

PrimitivePatch fit_cylinder(std::span<const Vec3> points, std::span<const Vec3> normals) {
    if (points.size() < 6) throw FitError("fit_cylinder: need at least 6 points");
    check_spread(points);
    const Vec3 centroid = centroid_of(points);
    const std::vector<Vec3> candidates =
        normals.empty() ? principal_directions(points)
                        : std::vector<Vec3>{axis_from_normals(normals)};

    // radius/center from a 2D circle fit in the plane through the centroid
    const auto circle_init = [&](Cylinder& cyl) {
        Vec3 e1, e2;
        orthobasis(cyl.direction, e1, e2);
        Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
        Vec3 atb = Vec3::Zero();
        for (const Vec3& p : points) {
            const Vec3 d = p - centroid;
            const Vec2 q(d.dot(e1), d.dot(e2));
            const Vec3 row(2.0 * q.x(), 2.0 * q.y(), 1.0);
            ata += row * row.transpose();
            atb += row * q.squaredNorm();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> cond(ata);
        if (cond.eigenvalues()[0] <= 1e-12 * std::max(cond.eigenvalues()[2], 1e-300)) {
            throw FitError("fit_cylinder: degenerate configuration");
        }
        const Vec3 sol = ata.ldlt().solve(atb);
        cyl.center = centroid + sol[0] * e1 + sol[1] * e2;
        const double r2 = sol[2] + sol[0] * sol[0] + sol[1] * sol[1];
        if (!(r2 > 0.0)) throw FitError("fit_cylinder: non-positive squared radius");
        cyl.radius = std::sqrt(r2);
    };

    Cylinder best;
    double best_sse = std::numeric_limits<double>::infinity();
    std::string last_error = "fit_cylinder: no valid initialization";
    for (const Vec3& axis : candidates) {
        Cylinder cyl;
        cyl.direction = axis;
        try {
            circle_init(cyl);
        } catch (const FitError& e) {
            last_error = e.what();
            continue;
        }
        Cylinder saved = cyl;
        const auto residuals = [&](Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
            Vec3 e1, e2;
            orthobasis(cyl.direction, e1, e2);
            r.resize(static_cast<Eigen::Index>(points.size()));
            if (jac) jac->resize(static_cast<Eigen::Index>(points.size()), 5);
            for (std::size_t i = 0; i < points.size(); ++i) {
                const Vec3 w = points[i] - cyl.center;
                const double h = w.dot(cyl.direction);
                const Vec3 radial = w - h * cyl.direction;
                const double rho = radial.norm();
                r[static_cast<Eigen::Index>(i)] = rho - cyl.radius;
                if (jac) {
                    const Vec3 rhat = rho > 1e-300 ? Vec3(radial / rho) : e1;
                    // params: center (e1,e2), axis tangent (e1,e2), radius
                    (*jac)(static_cast<Eigen::Index>(i), 0) = -rhat.dot(e1);
                    (*jac)(static_cast<Eigen::Index>(i), 1) = -rhat.dot(e2);
                    (*jac)(static_cast<Eigen::Index>(i), 2) = -h * rhat.dot(e1);
                    (*jac)(static_cast<Eigen::Index>(i), 3) = -h * rhat.dot(e2);
                    (*jac)(static_cast<Eigen::Index>(i), 4) = -1.0;
                }
            }
        };
        const auto apply = [&](const Eigen::VectorXd& delta, bool commit) {
            Vec3 b1, b2;
            orthobasis(saved.direction, b1, b2);
            cyl.center = saved.center + delta[0] * b1 + delta[1] * b2;
            cyl.direction = (saved.direction + delta[2] * b1 + delta[3] * b2).normalized();
            cyl.radius = std::max(saved.radius + delta[4], 1e-12);
            if (commit) saved = cyl;
        };
        refine_lm(residuals, apply);
        cyl = saved;
        double sse = 0.0;
        for (const Vec3& p : points) {
            const Vec3 w = p - cyl.center;
            const double d = (w - w.dot(cyl.direction) * cyl.direction).norm() - cyl.radius;
            sse += d * d;
        }
        if (sse < best_sse) {
            best_sse = sse;
            best = cyl;
        }
    }
    if (!std::isfinite(best_sse)) throw FitError(last_error);
    // canonical gauge: axis point closest to the centroid, positive leading axis sign
    best.center -= best.direction.dot(best.center - centroid) * best.direction;
    best.direction = canonical_sign(best.direction);
    return {PrimitiveKind::cylinder, best};
}

namespace {

// slope of radial distance vs height along an axis line through the
// centroid; apex where the radius extrapolates to zero
std::optional<Cone> cone_from_axis_guess(std::span<const Vec3> points, const Vec3& centroid,
                                         Vec3 axis) {
    double sh = 0, shh = 0, sr = 0, shr = 0;
    const double n = static_cast<double>(points.size());
    for (const Vec3& p : points) {
        const Vec3 w = p - centroid;
        const double h = w.dot(axis);
        const double rho = (w - h * axis).norm();
        sh += h;
        shh += h * h;
        sr += rho;
        shr += h * rho;
    }
    const double denom = n * shh - sh * sh;
    if (std::abs(denom) < 1e-18) return std::nullopt;
    const double slope = (n * shr - sh * sr) / denom;
    const double intercept = (sr - slope * sh) / n;
    if (std::abs(slope) < 1e-8) return std::nullopt;
    Cone cone;
    cone.apex = centroid - (intercept / slope) * axis;
    cone.direction = slope < 0.0 ? Vec3(-axis) : axis;
    cone.half_angle = std::atan(std::abs(slope));
    return cone;
}

}  // namespace

PrimitivePatch fit_cone(std::span<const Vec3> points, std::span<const Vec3> normals) {
    if (points.size() < 6) throw FitError("fit_cone: need at least 6 points");
    check_spread(points);
    const Vec3 centroid = centroid_of(points);
    std::vector<Cone> candidates;

    if (!normals.empty()) {
        Cone cone;
        // every tangent plane passes through the apex: n.(x - p) = 0
        Mat3 ata = Mat3::Zero();
        Vec3 atb = Vec3::Zero();
        for (std::size_t i = 0; i < points.size(); ++i) {
            ata += normals[i] * normals[i].transpose();
            atb += normals[i] * normals[i].dot(points[i]);
        }
        Eigen::SelfAdjointEigenSolver<Mat3> cond(ata);
        if (cond.eigenvalues()[0] <= 1e-10 * std::max(cond.eigenvalues()[2], 1e-300)) {
            throw FitError("fit_cone: degenerate normals (cylinder-like)");
        }
        cone.apex = ata.ldlt().solve(atb);
        // directions from the apex lie on a circular cap; its plane normal is the axis
        Vec3 mean_dir = Vec3::Zero();
        Mat3 dir_cov = Mat3::Zero();
        std::vector<Vec3> dirs;
        dirs.reserve(points.size());
        for (const Vec3& p : points) {
            const Vec3 w = p - cone.apex;
            const double len = w.norm();
            if (len < 1e-12) continue;
            dirs.push_back(w / len);
            mean_dir += dirs.back();
        }
        if (dirs.size() < 3) throw FitError("fit_cone: apex coincides with points");
        mean_dir /= static_cast<double>(dirs.size());
        for (const Vec3& d : dirs) {
            const Vec3 c = d - mean_dir;
            dir_cov += c * c.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> eig(dir_cov);
        cone.direction = eig.eigenvectors().col(0).normalized();
        if (cone.direction.dot(mean_dir) < 0.0) cone.direction = -cone.direction;
        double mean_cos = 0.0;
        for (const Vec3& d : dirs) mean_cos += d.dot(cone.direction);
        mean_cos /= static_cast<double>(dirs.size());
        cone.half_angle = std::acos(std::clamp(mean_cos, -1.0, 1.0));
        candidates.push_back(cone);
    } else {
        for (const Vec3& axis : principal_directions(points)) {
            if (auto cone = cone_from_axis_guess(points, centroid, axis)) {
                candidates.push_back(*cone);
            }
        }
        if (candidates.empty()) throw FitError("fit_cone: degenerate (cylinder-like) segment");
    }

    Cone best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (Cone cone : candidates) {
        cone.half_angle = std::clamp(cone.half_angle, kAngleFloor, kPi / 2.0 - kAngleFloor);
        Cone saved = cone;
        const auto residuals = [&](Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
            Vec3 e1, e2;
            orthobasis(cone.direction, e1, e2);
            const double s = std::sin(cone.half_angle);
            const double c = std::cos(cone.half_angle);
            r.resize(static_cast<Eigen::Index>(points.size()));
            if (jac) jac->resize(static_cast<Eigen::Index>(points.size()), 6);
            for (std::size_t i = 0; i < points.size(); ++i) {
                const Vec3 w = points[i] - cone.apex;
                const double h = w.dot(cone.direction);
                const Vec3 radial = w - h * cone.direction;
                const double rho = radial.norm();
                r[static_cast<Eigen::Index>(i)] = rho * c - h * s;
                if (jac) {
                    const Vec3 rhat = rho > 1e-300 ? Vec3(radial / rho) : e1;
                    // params: apex (3), axis tangent (2), half-angle
                    (*jac)(static_cast<Eigen::Index>(i), 0) =
                        -c * rhat.x() + s * cone.direction.x();
                    (*jac)(static_cast<Eigen::Index>(i), 1) =
                        -c * rhat.y() + s * cone.direction.y();
                    (*jac)(static_cast<Eigen::Index>(i), 2) =
                        -c * rhat.z() + s * cone.direction.z();
                    (*jac)(static_cast<Eigen::Index>(i), 3) = -c * h * rhat.dot(e1) - s * w.dot(e1);
                    (*jac)(static_cast<Eigen::Index>(i), 4) = -c * h * rhat.dot(e2) - s * w.dot(e2);
                    (*jac)(static_cast<Eigen::Index>(i), 5) = -rho * s - h * c;
                }
            }
        };
        const auto apply = [&](const Eigen::VectorXd& delta, bool commit) {
            Vec3 b1, b2;
            orthobasis(saved.direction, b1, b2);
            cone.apex = saved.apex + delta.head<3>();
            cone.direction = (saved.direction + delta[3] * b1 + delta[4] * b2).normalized();
            cone.half_angle =
                std::clamp(saved.half_angle + delta[5], kAngleFloor, kPi / 2.0 - kAngleFloor);
            if (commit) saved = cone;
        };
        refine_lm(residuals, apply);
        cone = saved;
        double sse = 0.0;
        for (const Vec3& p : points) {
            const double d = cone_signed_distance(p, cone);
            sse += d * d;
        }
        if (sse < best_sse) {
            best_sse = sse;
            best = cone;
        }
    }
    return {PrimitiveKind::cone, best};
}

PrimitivePatch fit_primitive(PrimitiveKind kind, std::span<const Vec3> points,
                             std::span<const Vec3> normals) {
    if (!normals.empty() && normals.size() != points.size()) {
        throw std::invalid_argument("fit_primitive: normals size mismatch");
    }
    switch (kind) {
        case PrimitiveKind::plane: return fit_plane(points);
        case PrimitiveKind::sphere: return fit_sphere(points);
        case PrimitiveKind::cylinder: return fit_cylinder(points, normals);
        case PrimitiveKind::cone: return fit_cone(points, normals);
        default: throw std::invalid_argument("fit_primitive: B-spline kinds are fit elsewhere");
    }
}

DistanceEvaluator::DistanceEvaluator(const PrimitivePatch& patch, int spline_samples)
    : patch_(&patch) {
    if (std::holds_alternative<bspline::BSplinePatch>(patch.shape)) {
        const auto& sp = std::get<bspline::BSplinePatch>(patch.shape);
        const int grid = std::max(2, static_cast<int>(std::ceil(std::sqrt(spline_samples))));
        const auto samples = bspline::sample_uniform(sp, grid, grid);
        spline_points_.reserve(samples.size());
        for (const auto& s : samples) spline_points_.push_back(s.position);
    }
}

double DistanceEvaluator::operator()(const Vec3& p) const {
    switch (patch_->kind) {
        case PrimitiveKind::plane: {
            const auto& pl = std::get<Plane>(patch_->shape);
            return std::abs(pl.normal.dot(p) - pl.offset);
        }
        case PrimitiveKind::sphere: {
            const auto& sp = std::get<Sphere>(patch_->shape);
            return std::abs((p - sp.center).norm() - sp.radius);
        }
        case PrimitiveKind::cylinder: {
            const auto& cy = std::get<Cylinder>(patch_->shape);
            const Vec3 w = p - cy.center;
            return std::abs((w - w.dot(cy.direction) * cy.direction).norm() - cy.radius);
        }
        case PrimitiveKind::cone: {
            return std::abs(cone_signed_distance(p, std::get<Cone>(patch_->shape)));
        }
        default: {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : spline_points_) best = std::min(best, (p - q).squaredNorm());
            return std::sqrt(best);
        }
    }
}

double primitive_distance(const Vec3& point, const PrimitivePatch& patch, int spline_samples) {
    return DistanceEvaluator(patch, spline_samples)(point);
}

std::vector<char> trim_inlier_mask(std::span<const Vec3> segment_points,
                                   std::span<const Vec3> sample_points, double epsilon) {
    if (segment_points.empty()) throw std::invalid_argument("trim_inlier_mask: empty segment");
    if (!(epsilon > 0.0)) throw std::invalid_argument("trim_inlier_mask: epsilon must be > 0");
    const std::vector<Vec3> seg(segment_points.begin(), segment_points.end());
    const std::vector<Vec3> samples(sample_points.begin(), sample_points.end());
    const Eigen::VectorXd d2 = kernels::min_sq_dist(samples, seg);
    std::vector<char> mask(sample_points.size());
    const double eps2 = epsilon * epsilon;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = d2[static_cast<Eigen::Index>(i)] <= eps2 ? 1 : 0;
    }
    return mask;
}

namespace {

struct Extent {
    double lo = 0.0;
    double hi = 1.0;
};

Extent axis_extent(std::span<const Vec3> segment, const Vec3& origin, const Vec3& axis) {
    if (segment.empty()) return {0.0, 1.0};
    Extent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Vec3& p : segment) {
        const double h = (p - origin).dot(axis);
        e.lo = std::min(e.lo, h);
        e.hi = std::max(e.hi, h);
    }
    if (!(e.hi > e.lo)) e.hi = e.lo + 1e-9;
    return e;
}

}  // namespace

std::vector<Vec3> sample_surface(const PrimitivePatch& patch, std::span<const Vec3> segment,
                                 int count, std::mt19937_64& rng) {
    if (count <= 0) return {};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(count));
    switch (patch.kind) {
        case PrimitiveKind::plane: {
            const auto& pl = std::get<Plane>(patch.shape);
            Vec3 e1, e2;
            orthobasis(pl.normal, e1, e2);
            const Vec3 base = pl.offset * pl.normal;
            const Extent eu = axis_extent(segment, base, e1);
            const Extent ev = axis_extent(segment, base, e2);
            for (int i = 0; i < count; ++i) {
                const double s = eu.lo + (eu.hi - eu.lo) * unit(rng);
                const double t = ev.lo + (ev.hi - ev.lo) * unit(rng);
                out.push_back(base + s * e1 + t * e2);
            }
            break;
        }
        case PrimitiveKind::sphere: {
            const auto& sp = std::get<Sphere>(patch.shape);
            for (int i = 0; i < count; ++i) {
                Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
                const double len = dir.norm();
                dir = len > 1e-12 ? Vec3(dir / len) : Vec3::UnitZ();
                out.push_back(sp.center + sp.radius * dir);
            }
            break;
        }
        case PrimitiveKind::cylinder: {
            const auto& cy = std::get<Cylinder>(patch.shape);
            Vec3 e1, e2;
            orthobasis(cy.direction, e1, e2);
            const Extent eh = axis_extent(segment, cy.center, cy.direction);
            for (int i = 0; i < count; ++i) {
                const double h = eh.lo + (eh.hi - eh.lo) * unit(rng);
                const double phi = 2.0 * kPi * unit(rng);
                out.push_back(cy.center + h * cy.direction +
                              cy.radius * (std::cos(phi) * e1 + std::sin(phi) * e2));
            }
            break;
        }
        case PrimitiveKind::cone: {
            const auto& co = std::get<Cone>(patch.shape);
            Vec3 e1, e2;
            orthobasis(co.direction, e1, e2);
            Extent eh = axis_extent(segment, co.apex, co.direction);
            eh.lo = std::max(eh.lo, 0.0);
            eh.hi = std::max(eh.hi, eh.lo + 1e-9);
            const double tan_a = std::tan(co.half_angle);
            for (int i = 0; i < count; ++i) {
                // area element grows linearly with height
                const double h =
                    std::sqrt(eh.lo * eh.lo + (eh.hi * eh.hi - eh.lo * eh.lo) * unit(rng));
                const double phi = 2.0 * kPi * unit(rng);
                out.push_back(co.apex + h * co.direction +
                              h * tan_a * (std::cos(phi) * e1 + std::sin(phi) * e2));
            }
            break;
        }
        default: {
            const auto& sp = std::get<bspline::BSplinePatch>(patch.shape);
            for (int i = 0; i < count; ++i) {
                out.push_back(bspline::evaluate(sp, unit(rng), unit(rng)));
            }
            break;
        }
    }
    return out;
}

std::vector<Vec3> uv_grid_samples(const PrimitivePatch& patch, std::span<const Vec3> segment,
                                  int nu, int nv) {
    if (nu < 2 || nv < 2) throw std::invalid_argument("uv_grid_samples: nu, nv must be >= 2");
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(nu) * nv);
    const auto grid = [&](auto&& f) {
        for (int i = 0; i < nu; ++i) {
            for (int j = 0; j < nv; ++j) {
                out.push_back(f(i / double(nu - 1), j / double(nv - 1)));
            }
        }
    };
    switch (patch.kind) {
        case PrimitiveKind::plane: {
            const auto& pl = std::get<Plane>(patch.shape);
            Vec3 e1, e2;
            orthobasis(pl.normal, e1, e2);
            const Vec3 base = pl.offset * pl.normal;
            const Extent eu = axis_extent(segment, base, e1);
            const Extent ev = axis_extent(segment, base, e2);
            grid([&](double s, double t) {
                return Vec3(base + (eu.lo + (eu.hi - eu.lo) * s) * e1 +
                            (ev.lo + (ev.hi - ev.lo) * t) * e2);
            });
            break;
        }
        case PrimitiveKind::sphere: {
            const auto& sp = std::get<Sphere>(patch.shape);
            grid([&](double s, double t) {
                const double theta = kPi * s;
                const double phi = 2.0 * kPi * t;
                return Vec3(sp.center + sp.radius * Vec3(std::sin(theta) * std::cos(phi),
                                                         std::sin(theta) * std::sin(phi),
                                                         std::cos(theta)));
            });
            break;
        }
        case PrimitiveKind::cylinder: {
            const auto& cy = std::get<Cylinder>(patch.shape);
            Vec3 e1, e2;
            orthobasis(cy.direction, e1, e2);
            const Extent eh = axis_extent(segment, cy.center, cy.direction);
            grid([&](double s, double t) {
                const double h = eh.lo + (eh.hi - eh.lo) * s;
                const double phi = 2.0 * kPi * t;
                return Vec3(cy.center + h * cy.direction +
                            cy.radius * (std::cos(phi) * e1 + std::sin(phi) * e2));
            });
            break;
        }
        case PrimitiveKind::cone: {
            const auto& co = std::get<Cone>(patch.shape);
            Vec3 e1, e2;
            orthobasis(co.direction, e1, e2);
            Extent eh = axis_extent(segment, co.apex, co.direction);
            eh.lo = std::max(eh.lo, 0.0);
            const double tan_a = std::tan(co.half_angle);
            grid([&](double s, double t) {
                const double h = eh.lo + (eh.hi - eh.lo) * s;
                const double phi = 2.0 * kPi * t;
                return Vec3(co.apex + h * co.direction +
                            h * tan_a * (std::cos(phi) * e1 + std::sin(phi) * e2));
            });
            break;
        }
        default: {
            const auto& sp = std::get<bspline::BSplinePatch>(patch.shape);
            const auto samples = bspline::sample_uniform(sp, nu, nv);
            for (const auto& s : samples) out.push_back(s.position);
            break;
        }
    }
    return out;
}

}  // namespace parsefit::primitives
