#include "parsefit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

namespace parsefit::synth {

namespace {

constexpr double kPi = std::numbers::pi;

using primitives::Cone;
using primitives::Cylinder;
using primitives::Plane;
using primitives::PrimitiveKind;
using primitives::PrimitivePatch;
using primitives::Sphere;

struct Generated {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    PrimitivePatch truth;
    PrimitiveKind kind;
    double area = 1.0;
};

Generated gen_plane(const Vec3& origin, const Vec3& e1, const Vec3& e2, double w1, double w2,
                    int count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Generated g;
    Plane plane;
    plane.normal = e1.cross(e2).normalized();
    plane.offset = plane.normal.dot(origin);
    g.truth = {PrimitiveKind::plane, plane};
    g.kind = PrimitiveKind::plane;
    g.area = w1 * w2;
    for (int i = 0; i < count; ++i) {
        g.points.push_back(origin + (unit(rng) - 0.5) * w1 * e1 + (unit(rng) - 0.5) * w2 * e2);
        g.normals.push_back(plane.normal);
    }
    return g;
}

Generated gen_sphere(const Vec3& center, double radius, int count, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Generated g;
    Sphere sphere{center, radius};
    g.truth = {PrimitiveKind::sphere, sphere};
    g.kind = PrimitiveKind::sphere;
    g.area = 4.0 * kPi * radius * radius;
    for (int i = 0; i < count; ++i) {
        Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
        dir.normalize();
        g.points.push_back(center + radius * dir);
        g.normals.push_back(dir);
    }
    return g;
}

Generated gen_cylinder(const Vec3& center, const Vec3& axis, double radius, double height,
                       int count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Generated g;
    Cylinder cyl{center, axis.normalized(), radius};
    g.truth = {PrimitiveKind::cylinder, cyl};
    g.kind = PrimitiveKind::cylinder;
    g.area = 2.0 * kPi * radius * height;
    Vec3 e1 = cyl.direction.unitOrthogonal();
    Vec3 e2 = cyl.direction.cross(e1);
    for (int i = 0; i < count; ++i) {
        const double h = (unit(rng) - 0.5) * height;
        const double phi = 2.0 * kPi * unit(rng);
        const Vec3 radial = std::cos(phi) * e1 + std::sin(phi) * e2;
        g.points.push_back(center + h * cyl.direction + radius * radial);
        g.normals.push_back(radial);
    }
    return g;
}

Generated gen_cone(const Vec3& apex, const Vec3& axis, double half_angle, double h0, double h1,
                   int count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Generated g;
    Cone cone{apex, axis.normalized(), half_angle};
    g.truth = {PrimitiveKind::cone, cone};
    g.kind = PrimitiveKind::cone;
    const double tan_a = std::tan(half_angle);
    g.area = kPi * tan_a * (h1 * h1 - h0 * h0) / std::cos(half_angle);
    Vec3 e1 = cone.direction.unitOrthogonal();
    Vec3 e2 = cone.direction.cross(e1);
    for (int i = 0; i < count; ++i) {
        const double h = std::sqrt(h0 * h0 + (h1 * h1 - h0 * h0) * unit(rng));
        const double phi = 2.0 * kPi * unit(rng);
        const Vec3 radial = std::cos(phi) * e1 + std::sin(phi) * e2;
        g.points.push_back(apex + h * cone.direction + h * tan_a * radial);
        g.normals.push_back(std::cos(half_angle) * radial -
                            std::sin(half_angle) * cone.direction);
    }
    return g;
}

Generated gen_spline(const bspline::BSplinePatch& patch, PrimitiveKind kind, double area_guess,
                     int count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Generated g;
    g.truth = {kind, patch};
    g.kind = kind;
    g.area = area_guess;
    for (int i = 0; i < count; ++i) {
        Vec3 p, n;
        surface_frame(patch, unit(rng), unit(rng), p, n);
        g.points.push_back(p);
        g.normals.push_back(n);
    }
    return g;
}

void apply_noise(PointCloud& cloud, const NoiseModel& noise, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double max_angle = noise.normal_degrees * kPi / 180.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Vec3& n = cloud.normals[i];
        cloud.positions[i] += noise.position_amplitude * unit(rng) * n;
        if (max_angle > 0.0) {
            Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
            axis -= axis.dot(n) * n;
            const double len = axis.norm();
            if (len > 1e-12) {
                axis /= len;
                n = Eigen::AngleAxisd(max_angle * unit(rng), axis) * n;
                n.normalize();
            }
        }
    }
}

}  // namespace

void surface_frame(const bspline::BSplinePatch& patch, double u, double v, Vec3& position,
                   Vec3& normal) {
    position = bspline::evaluate(patch, u, v);
    const double h = 1e-5;
    const double u0 = std::clamp(u - h, 0.0, 1.0), u1 = std::clamp(u + h, 0.0, 1.0);
    const double v0 = std::clamp(v - h, 0.0, 1.0), v1 = std::clamp(v + h, 0.0, 1.0);
    const Vec3 tu = bspline::evaluate(patch, u1, v) - bspline::evaluate(patch, u0, v);
    const Vec3 tv = bspline::evaluate(patch, u, v1) - bspline::evaluate(patch, u, v0);
    normal = tu.cross(tv);
    const double len = normal.norm();
    normal = len > 1e-15 ? Vec3(normal / len) : Vec3::UnitZ();
}

bspline::BSplinePatch make_wave_patch(int grid_n, double x0, double y0, double w, double z0,
                                      double amplitude, double periods) {
    bspline::ControlGrid grid(grid_n, grid_n);
    for (int p = 0; p < grid_n; ++p) {
        for (int q = 0; q < grid_n; ++q) {
            const double s = p / double(grid_n - 1);
            const double t = q / double(grid_n - 1);
            grid.at(p, q) = Vec3(x0 + w * s, y0 + w * t,
                                 z0 + amplitude * std::sin(2.0 * kPi * periods * s) *
                                          std::cos(2.0 * kPi * periods * t));
        }
    }
    return bspline::make_patch(std::move(grid));
}

bspline::BSplinePatch random_smooth_patch(int rows, int cols, bool closed_u, bool closed_v,
                                          std::mt19937_64& rng, double jitter) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    bspline::ControlGrid grid(rows, cols, closed_u, closed_v);
    const double a = 0.35 * unit(rng);
    const double b = 0.35 * unit(rng);
    const double c = 0.2 * unit(rng);
    for (int p = 0; p < rows; ++p) {
        for (int q = 0; q < cols; ++q) {
            const double s = p / double(rows - (closed_u ? 0 : 1));
            const double t = q / double(cols - (closed_v ? 0 : 1));
            Vec3 base;
            if (closed_u) {
                // tube-like: circle in u, sweep in v
                const double phi = 2.0 * kPi * s;
                const double r = 0.3 + 0.08 * std::sin(2.0 * kPi * t);
                base = Vec3(r * std::cos(phi), r * std::sin(phi), t + c * t * t);
            } else {
                base = Vec3(s, t, a * s * s + b * t * t + c * s * t);
            }
            grid.at(p, q) =
                base + jitter * Vec3(unit(rng), unit(rng), unit(rng));
        }
    }
    // rigid motion for generality
    const Eigen::AngleAxisd rot(0.5 * unit(rng),
                                Vec3(unit(rng), unit(rng), unit(rng)).normalized());
    const Vec3 shift(0.2 * unit(rng), 0.2 * unit(rng), 0.2 * unit(rng));
    for (Vec3& p : grid.points) p = rot * p + shift;
    return bspline::make_patch(std::move(grid));
}

std::vector<bspline::UVSample> sample_patch(const bspline::BSplinePatch& patch, int count,
                                            std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<bspline::UVSample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const Vec2 uv(unit(rng), unit(rng));
        out.push_back({uv, bspline::evaluate(patch, uv.x(), uv.y())});
    }
    return out;
}

std::vector<bspline::UVSample> sample_patch_stratified(const bspline::BSplinePatch& patch,
                                                       int count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = std::max(2, static_cast<int>(std::ceil(std::sqrt(count))));
    std::vector<bspline::UVSample> out;
    out.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 uv((i + unit(rng)) / n, (j + unit(rng)) / n);
            out.push_back({uv, bspline::evaluate(patch, uv.x(), uv.y())});
        }
    }
    return out;
}

std::vector<std::vector<Vec3>> Scene::segments() const {
    std::vector<std::vector<Vec3>> out(truth.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[static_cast<std::size_t>(labels[i])].push_back(cloud.positions[i]);
    }
    return out;
}

std::vector<std::string> scene_names() {
    return {"plane",      "sphere",      "cylinder", "cone", "wave",
            "two_planes", "two_spheres", "trio",     "quad"};
}

Scene make_scene(const std::string& name, int total_points, std::uint64_t seed,
                 const NoiseModel& noise) {
    std::mt19937_64 rng(seed);
    std::vector<Generated> parts;

    const auto wave = [&](int count, std::mt19937_64& r) {
        return gen_spline(make_wave_patch(10, -0.5, 0.22, 0.28, 0.22, 0.06, 1.25),
                          PrimitiveKind::open_bspline, 0.085, count, r);
    };

    if (name == "plane") {
        parts.push_back(gen_plane(Vec3(0, 0, 0), Vec3::UnitX(), Vec3::UnitY(), 1.0, 1.0,
                                  total_points, rng));
    } else if (name == "sphere") {
        parts.push_back(gen_sphere(Vec3(0.1, 0.2, 0.3), 0.5, total_points, rng));
    } else if (name == "cylinder") {
        parts.push_back(
            gen_cylinder(Vec3(0, 0, 0), Vec3::UnitZ(), 0.25, 0.8, total_points, rng));
    } else if (name == "cone") {
        parts.push_back(gen_cone(Vec3(0, 0, 0.6), -Vec3::UnitZ(), 0.45, 0.2, 0.9, total_points,
                                 rng));
    } else if (name == "wave") {
        parts.push_back(wave(total_points, rng));
    } else if (name == "two_planes") {
        // kept narrower than their gap so position features alone split them
        parts.push_back(gen_plane(Vec3(0, 0, 0), Vec3::UnitX(), Vec3::UnitY(), 0.45, 0.45,
                                  total_points / 2, rng));
        parts.push_back(gen_plane(Vec3(0, 0, 0.5), Vec3::UnitX(), Vec3::UnitY(), 0.45, 0.45,
                                  total_points - total_points / 2, rng));
    } else if (name == "two_spheres") {
        parts.push_back(gen_sphere(Vec3(-0.5, 0, 0), 0.3, total_points / 2, rng));
        parts.push_back(gen_sphere(Vec3(0.6, 0.1, 0), 0.35, total_points - total_points / 2, rng));
    } else if (name == "trio" || name == "quad") {
        // shapes parked in separate corners: the gaps between any two shapes
        // exceed their extents, which position-based embeddings need
        const bool with_wave = name == "quad";
        std::vector<double> areas = {0.275 * 0.275, 2.0 * kPi * 0.08 * 0.25,
                                     4.0 * kPi * 0.11 * 0.11};
        if (with_wave) areas.push_back(0.085);
        double total_area = 0.0;
        for (double a : areas) total_area += a;
        std::vector<int> counts;
        int used = 0;
        for (std::size_t i = 0; i + 1 < areas.size(); ++i) {
            counts.push_back(static_cast<int>(total_points * areas[i] / total_area));
            used += counts.back();
        }
        counts.push_back(total_points - used);
        parts.push_back(gen_plane(Vec3(-0.37, -0.37, -0.25), Vec3::UnitX(), Vec3::UnitY(), 0.275,
                                  0.275, counts[0], rng));
        parts.push_back(
            gen_cylinder(Vec3(0.37, -0.35, 0.0), Vec3::UnitZ(), 0.08, 0.25, counts[1], rng));
        parts.push_back(gen_sphere(Vec3(0.35, 0.35, -0.07), 0.11, counts[2], rng));
        if (with_wave) parts.push_back(wave(counts[3], rng));
    } else {
        throw std::invalid_argument("make_scene: unknown scene \"" + name + "\"");
    }

    Scene scene;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        Generated& g = parts[k];
        scene.truth.push_back(std::move(g.truth));
        scene.kinds.push_back(g.kind);
        for (std::size_t i = 0; i < g.points.size(); ++i) {
            scene.cloud.positions.push_back(g.points[i]);
            scene.cloud.normals.push_back(g.normals[i]);
            scene.labels.push_back(static_cast<int>(k));
        }
    }
    apply_noise(scene.cloud, noise, rng);
    return scene;
}

}  // namespace parsefit::synth
