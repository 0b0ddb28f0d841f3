#include "parsefit/bspline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "parsefit/kernels.hpp"

namespace parsefit::bspline {

namespace {

bool non_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] < v[i - 1]) return false;
    }
    return true;
}

// Active basis values at u for one direction: 4 weights applied to
// consecutive control indices start..start+3 (wrapped when closed).
struct SpanWeights {
    int start = 0;
    double w[4] = {0, 0, 0, 0};
};

// Knot span lookup for a clamped knot vector, then the iterative
// Cox-de Boor triangle for the degree+1 nonzero values.
SpanWeights open_span_weights(double u, const KnotVector& knots, int count) {
    const auto& t = knots.values;
    int span;
    if (u >= t[static_cast<std::size_t>(count)]) {
        span = count - 1;  // clamp right end into the last span
    } else {
        span = kDegree;
        while (u >= t[static_cast<std::size_t>(span + 1)]) ++span;
    }
    double left[kDegree + 1];
    double right[kDegree + 1];
    double n[kDegree + 1];
    n[0] = 1.0;
    for (int j = 1; j <= kDegree; ++j) {
        left[j] = u - t[static_cast<std::size_t>(span + 1 - j)];
        right[j] = t[static_cast<std::size_t>(span + j)] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        n[j] = saved;
    }
    SpanWeights out;
    out.start = span - kDegree;
    for (int m = 0; m <= kDegree; ++m) out.w[m] = n[m];
    return out;
}

// Uniform periodic direction: span j = floor(u*count), local parameter
// t in [0,1), weights from the uniform cubic basis segment applied to
// controls (j-1 .. j+2) mod count.
SpanWeights periodic_span_weights(double u, int count) {
    if (u >= 1.0) u = 0.0;
    const double scaled = u * count;
    int j = std::min(static_cast<int>(scaled), count - 1);
    const double t = scaled - j;
    const double t2 = t * t;
    const double t3 = t2 * t;
    SpanWeights out;
    out.start = j - 1;
    out.w[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
    out.w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
    out.w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
    out.w[3] = t3 / 6.0;
    return out;
}

SpanWeights direction_weights(double u, const KnotVector& knots, int count, bool closed) {
    return closed ? periodic_span_weights(u, count) : open_span_weights(u, knots, count);
}

int wrap_index(int i, int count, bool closed) {
    if (!closed) return i;
    i %= count;
    return i < 0 ? i + count : i;
}

void check_domain(double u, double v) {
    if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("evaluate: (u,v) outside [0,1]^2");
    }
}

void check_patch(const BSplinePatch& patch) {
    const ControlGrid& g = patch.grid;
    if (g.rows < 4 || g.cols < 4) throw std::invalid_argument("patch: control grid must be >= 4x4");
    if (g.closed_u ? !patch.knots_u.valid_closed(g.rows) : !patch.knots_u.valid_open(g.rows)) {
        throw std::invalid_argument("patch: knots_u inconsistent with grid");
    }
    if (g.closed_v ? !patch.knots_v.valid_closed(g.cols) : !patch.knots_v.valid_open(g.cols)) {
        throw std::invalid_argument("patch: knots_v inconsistent with grid");
    }
}

std::vector<double> direction_parameters(int n, bool closed) {
    std::vector<double> out(static_cast<std::size_t>(n));
    const double denom = closed ? n : n - 1;
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i / denom;
    return out;
}

}  // namespace

KnotVector KnotVector::clamped_uniform(int control_count) {
    if (control_count < 4) throw std::invalid_argument("knots: need at least 4 control points");
    KnotVector k;
    k.values.assign(static_cast<std::size_t>(control_count) + kDegree + 1, 0.0);
    const int spans = control_count - kDegree;
    for (int i = 0; i <= kDegree; ++i) {
        k.values[static_cast<std::size_t>(i)] = 0.0;
        k.values[k.values.size() - 1 - static_cast<std::size_t>(i)] = 1.0;
    }
    for (int i = 1; i < spans; ++i) {
        k.values[static_cast<std::size_t>(kDegree + i)] = static_cast<double>(i) / spans;
    }
    return k;
}

KnotVector KnotVector::periodic_uniform(int control_count) {
    if (control_count < 4) throw std::invalid_argument("knots: need at least 4 control points");
    KnotVector k;
    k.values.resize(static_cast<std::size_t>(control_count) + 1);
    for (int i = 0; i <= control_count; ++i) {
        k.values[static_cast<std::size_t>(i)] = static_cast<double>(i) / control_count;
    }
    return k;
}

bool KnotVector::valid_open(int control_count) const {
    if (static_cast<int>(values.size()) != control_count + kDegree + 1) return false;
    if (!non_decreasing(values)) return false;
    for (int i = 0; i <= kDegree; ++i) {
        if (values[static_cast<std::size_t>(i)] != values[0]) return false;
        if (values[values.size() - 1 - static_cast<std::size_t>(i)] != values.back()) return false;
    }
    return values.front() == 0.0 && values.back() == 1.0;
}

bool KnotVector::valid_closed(int control_count) const {
    return static_cast<int>(values.size()) == control_count + 1 && non_decreasing(values) &&
           values.front() == 0.0 && values.back() == 1.0;
}

BSplinePatch make_patch(ControlGrid grid) {
    if (grid.rows < 4 || grid.cols < 4) {
        throw std::invalid_argument("make_patch: control grid must be >= 4x4");
    }
    BSplinePatch patch;
    patch.knots_u = grid.closed_u ? KnotVector::periodic_uniform(grid.rows)
                                  : KnotVector::clamped_uniform(grid.rows);
    patch.knots_v = grid.closed_v ? KnotVector::periodic_uniform(grid.cols)
                                  : KnotVector::clamped_uniform(grid.cols);
    patch.grid = std::move(grid);
    return patch;
}

std::vector<double> basis_functions(double u, const KnotVector& knots, int count) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("basis_functions: u outside [0,1]");
    if (!knots.valid_open(count)) {
        throw std::invalid_argument("basis_functions: knot vector inconsistent with count");
    }
    const SpanWeights sw = open_span_weights(u, knots, count);
    std::vector<double> out(static_cast<std::size_t>(count), 0.0);
    for (int m = 0; m <= kDegree; ++m) out[static_cast<std::size_t>(sw.start + m)] = sw.w[m];
    return out;
}

Vec3 evaluate(const BSplinePatch& patch, double u, double v) {
    check_domain(u, v);
    const ControlGrid& g = patch.grid;
    const SpanWeights wu = direction_weights(u, patch.knots_u, g.rows, g.closed_u);
    const SpanWeights wv = direction_weights(v, patch.knots_v, g.cols, g.closed_v);
    Vec3 s = Vec3::Zero();
    for (int m = 0; m <= kDegree; ++m) {
        const int p = wrap_index(wu.start + m, g.rows, g.closed_u);
        for (int n = 0; n <= kDegree; ++n) {
            const int q = wrap_index(wv.start + n, g.cols, g.closed_v);
            s += (wu.w[m] * wv.w[n]) * g.at(p, q);
        }
    }
    return s;
}

std::vector<UVSample> sample_uniform(const BSplinePatch& patch, int nu, int nv) {
    if (nu < 2 || nv < 2) throw std::invalid_argument("sample_uniform: nu, nv must be >= 2");
    check_patch(patch);
    const auto us = direction_parameters(nu, patch.grid.closed_u);
    const auto vs = direction_parameters(nv, patch.grid.closed_v);
    std::vector<UVSample> out;
    out.reserve(static_cast<std::size_t>(nu) * nv);
    for (double u : us) {
        for (double v : vs) {
            out.push_back({Vec2(u, v), evaluate(patch, u, v)});
        }
    }
    return out;
}

ControlGrid fit_control_grid(const std::vector<UVSample>& samples, int rows, int cols,
                             bool closed_u, bool closed_v, double max_extent_factor) {
    if (rows < 4 || cols < 4) throw std::invalid_argument("fit_control_grid: grid must be >= 4x4");
    const int n = rows * cols;
    const int s = static_cast<int>(samples.size());
    if (s < n) {
        throw FitError("fit_control_grid: " + std::to_string(s) + " samples for " +
                       std::to_string(n) + " control points (underdetermined)");
    }
    const KnotVector ku = closed_u ? KnotVector::periodic_uniform(rows)
                                   : KnotVector::clamped_uniform(rows);
    const KnotVector kv = closed_v ? KnotVector::periodic_uniform(cols)
                                   : KnotVector::clamped_uniform(cols);

    struct Entry {
        int idx;
        double w;
    };
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd atb = Eigen::MatrixXd::Zero(n, 3);
    Entry row[16];
    for (const UVSample& sample : samples) {
        const double u = sample.uv.x();
        const double v = sample.uv.y();
        if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("fit_control_grid: uv outside [0,1]^2");
        }
        const SpanWeights wu = direction_weights(u, ku, rows, closed_u);
        const SpanWeights wv = direction_weights(v, kv, cols, closed_v);
        int m = 0;
        for (int a = 0; a <= kDegree; ++a) {
            const int p = wrap_index(wu.start + a, rows, closed_u);
            for (int b = 0; b <= kDegree; ++b) {
                const int q = wrap_index(wv.start + b, cols, closed_v);
                row[m++] = {p * cols + q, wu.w[a] * wv.w[b]};
            }
        }
        for (int a = 0; a < 16; ++a) {
            for (int b = 0; b < 16; ++b) ata(row[a].idx, row[b].idx) += row[a].w * row[b].w;
            atb.row(row[a].idx) += row[a].w * sample.position.transpose();
        }
    }

    Eigen::MatrixXd solution;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    const double dmin = d.minCoeff();
    if (ldlt.info() == Eigen::Success && dmin > 1e-12 * std::max(dmax, 1e-300)) {
        solution = ldlt.solve(atb);
    } else {
        // rank-revealing fallback on the full design matrix
        Eigen::MatrixXd design = Eigen::MatrixXd::Zero(s, n);
        Eigen::MatrixXd targets(s, 3);
        for (int i = 0; i < s; ++i) {
            const SpanWeights wu =
                direction_weights(samples[static_cast<std::size_t>(i)].uv.x(), ku, rows, closed_u);
            const SpanWeights wv =
                direction_weights(samples[static_cast<std::size_t>(i)].uv.y(), kv, cols, closed_v);
            for (int a = 0; a <= kDegree; ++a) {
                const int p = wrap_index(wu.start + a, rows, closed_u);
                for (int b = 0; b <= kDegree; ++b) {
                    const int q = wrap_index(wv.start + b, cols, closed_v);
                    design(i, p * cols + q) += wu.w[a] * wv.w[b];
                }
            }
            targets.row(i) = samples[static_cast<std::size_t>(i)].position.transpose();
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < n) {
            throw FitError("fit_control_grid: rank-deficient system (degenerate uv distribution)");
        }
        solution = qr.solve(targets);
    }

    ControlGrid grid(rows, cols, closed_u, closed_v);
    for (int i = 0; i < n; ++i) grid.points[static_cast<std::size_t>(i)] = solution.row(i);

    // a minimizer with control points far outside the data is the footprint
    // of a barely-observable direction; surface it as ill-posedness
    if (max_extent_factor <= 0.0) return grid;
    Vec3 tlo = samples[0].position, thi = tlo;
    for (const UVSample& sample : samples) {
        tlo = tlo.cwiseMin(sample.position);
        thi = thi.cwiseMax(sample.position);
    }
    Vec3 clo = grid.points[0], chi = clo;
    for (const Vec3& c : grid.points) {
        clo = clo.cwiseMin(c);
        chi = chi.cwiseMax(c);
    }
    if ((chi - clo).norm() > max_extent_factor * std::max((thi - tlo).norm(), 1e-12)) {
        throw FitError("fit_control_grid: ill-conditioned system (unconstrained control points)");
    }
    return grid;
}

double patch_chamfer(const BSplinePatch& patch, const std::vector<Vec3>& points, int nu, int nv) {
    const auto samples = sample_uniform(patch, nu, nv);
    std::vector<Vec3> surf;
    surf.reserve(samples.size());
    for (const auto& s : samples) surf.push_back(s.position);
    const double to_surf = kernels::min_sq_dist(points, surf).mean();
    const double to_points = kernels::min_sq_dist(surf, points).mean();
    return 0.5 * (to_surf + to_points);
}

StandardizeResult standardize_patch(const std::vector<UVSample>& dense_samples, bool closed_u,
                                    bool closed_v, double cd_threshold, int grid_size) {
    if (dense_samples.size() < 400) {
        throw FitError("standardize_patch: need at least 400 samples");
    }
    ControlGrid grid = fit_control_grid(dense_samples, grid_size, grid_size, closed_u, closed_v);
    StandardizeResult result;
    result.patch = make_patch(std::move(grid));
    // resample at the input parameters so the Chamfer check measures surface
    // deviation rather than sampling spacing
    std::vector<Vec3> targets, refit;
    targets.reserve(dense_samples.size());
    refit.reserve(dense_samples.size());
    for (const auto& s : dense_samples) {
        targets.push_back(s.position);
        refit.push_back(evaluate(result.patch, s.uv.x(), s.uv.y()));
    }
    result.chamfer = 0.5 * (kernels::min_sq_dist(targets, refit).mean() +
                            kernels::min_sq_dist(refit, targets).mean());
    if (result.chamfer > cd_threshold) {
        throw FitError("standardize_patch: refit chamfer " + std::to_string(result.chamfer) +
                       " exceeds threshold " + std::to_string(cd_threshold));
    }
    return result;
}

namespace {

// Andrew monotone chain; returns the hull counterclockwise.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
    });
    const auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

// orientation of the minimum-area bounding rectangle (rotating calipers)
double min_area_rect_angle(const std::vector<Vec2>& pts) {
    const auto hull = convex_hull(pts);
    if (hull.size() < 3) return 0.0;
    double best_area = std::numeric_limits<double>::infinity();
    double best_angle = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec2 edge = hull[(i + 1) % hull.size()] - hull[i];
        const double len = edge.norm();
        if (len < 1e-15) continue;
        const Vec2 e = edge / len;
        double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
        for (const Vec2& p : hull) {
            const double x = p.x() * e.x() + p.y() * e.y();
            const double y = -p.x() * e.y() + p.y() * e.x();
            lo_x = std::min(lo_x, x);
            hi_x = std::max(hi_x, x);
            lo_y = std::min(lo_y, y);
            hi_y = std::max(hi_y, y);
        }
        const double area = (hi_x - lo_x) * (hi_y - lo_y);
        if (area < best_area) {
            best_area = area;
            best_angle = std::atan2(e.y(), e.x());
        }
    }
    return best_angle;
}

}  // namespace

std::vector<Vec2> init_parametrization(const std::vector<Vec3>& points) {
    if (points.size() < 3) throw FitError("init_parametrization: need at least 3 points");
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : points) {
        const Vec3 d = p - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 evals = eig.eigenvalues();  // ascending
    if (evals[2] <= 0.0 || evals[1] <= 1e-12 * evals[2]) {
        throw FitError("init_parametrization: degenerate (collinear) point set");
    }
    const Vec3 dir_u = eig.eigenvectors().col(2);
    const Vec3 dir_v = eig.eigenvectors().col(1);
    std::vector<Vec2> uv(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3 d = points[i] - centroid;
        uv[i] = Vec2(d.dot(dir_u), d.dot(dir_v));
    }
    // near-equal plane variances leave the in-plane basis arbitrary, which
    // can leave the unit square's corners without samples; aligning to the
    // minimum-area bounding rectangle keeps the knot-span coverage full
    const double angle = min_area_rect_angle(uv);
    const double ca = std::cos(angle), sa = std::sin(angle);
    double ulo = std::numeric_limits<double>::infinity(), uhi = -ulo;
    double vlo = ulo, vhi = -ulo;
    for (Vec2& p : uv) {
        p = Vec2(ca * p.x() + sa * p.y(), -sa * p.x() + ca * p.y());
        ulo = std::min(ulo, p.x());
        uhi = std::max(uhi, p.x());
        vlo = std::min(vlo, p.y());
        vhi = std::max(vhi, p.y());
    }
    double du = uhi - ulo;
    double dv = vhi - vlo;
    if (!(du > 0.0) || !(dv > 0.0)) {
        throw FitError("init_parametrization: degenerate planar spread");
    }
    for (Vec2& p : uv) {
        p.x() = (p.x() - ulo) / du;
        p.y() = (p.y() - vlo) / dv;
    }
    return uv;
}

}  // namespace parsefit::bspline
