#pragma once

#include <random>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "parsefit/bspline.hpp"
#include "parsefit/types.hpp"

namespace parsefit::primitives {

enum class PrimitiveKind { plane, sphere, cylinder, cone, open_bspline, closed_bspline };

std::string_view kind_name(PrimitiveKind kind);
PrimitiveKind kind_from_name(std::string_view name);

struct Plane {
    Vec3 normal = Vec3::UnitZ();  // unit; plane is n.x = offset
    double offset = 0.0;
};

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
};

struct Cylinder {
    Vec3 center = Vec3::Zero();  // a point on the axis
    Vec3 direction = Vec3::UnitZ();
    double radius = 1.0;
};

struct Cone {
    Vec3 apex = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();  // from apex into the opening
    double half_angle = 0.5;         // radians, strictly inside (0, pi/2)
};

/// One fitted surface patch of any supported kind.
struct PrimitivePatch {
    PrimitiveKind kind = PrimitiveKind::plane;
    std::variant<Plane, Sphere, Cylinder, Cone, bspline::BSplinePatch> shape;
};

PrimitivePatch fit_plane(std::span<const Vec3> points);
PrimitivePatch fit_sphere(std::span<const Vec3> points);
PrimitivePatch fit_cylinder(std::span<const Vec3> points, std::span<const Vec3> normals = {});
PrimitivePatch fit_cone(std::span<const Vec3> points, std::span<const Vec3> normals = {});

/// Least-squares fit of one basic primitive kind (B-splines excluded).
/// Normals, when given, drive the cylinder/cone axis initialization.
PrimitivePatch fit_primitive(PrimitiveKind kind, std::span<const Vec3> points,
                             std::span<const Vec3> normals = {});

/// Point-to-surface distance. Analytic for the basic kinds; B-splines use
/// the minimum distance to a dense parameter-space sampling. Prefer
/// DistanceEvaluator when querying many points against one patch.
double primitive_distance(const Vec3& point, const PrimitivePatch& patch, int spline_samples = 2500);

/// Caches the dense sample set for B-spline patches so batch distance
/// queries stay cheap.
class DistanceEvaluator {
  public:
    explicit DistanceEvaluator(const PrimitivePatch& patch, int spline_samples = 2500);
    double operator()(const Vec3& point) const;

  private:
    const PrimitivePatch* patch_;
    std::vector<Vec3> spline_points_;
};

/// Keeps sample i iff it lies within epsilon of some segment point; bounds
/// unbounded primitives by the region their segment supports.
std::vector<char> trim_inlier_mask(std::span<const Vec3> segment_points,
                                   std::span<const Vec3> sample_points, double epsilon);

/// Random surface samples, restricted for unbounded kinds to the extent the
/// segment occupies (plane rectangle, cylinder height span, cone slant span).
std::vector<Vec3> sample_surface(const PrimitivePatch& patch, std::span<const Vec3> segment,
                                 int count, std::mt19937_64& rng);

/// Regular nu x nv grid over the patch's natural parameter domain, again
/// segment-bounded for unbounded kinds. Row-major, index = iu*nv + iv.
std::vector<Vec3> uv_grid_samples(const PrimitivePatch& patch, std::span<const Vec3> segment,
                                  int nu, int nv);

}  // namespace parsefit::primitives
