#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parsefit/bspline.hpp"
#include "parsefit/primitives.hpp"
#include "parsefit/types.hpp"

namespace parsefit::synth {

/// Noise applied to generated points: uniform offset along the true normal
/// plus a uniform angular perturbation of the normal itself.
struct NoiseModel {
    double position_amplitude = 0.01;  // uniform in [-a, a] along the normal
    double normal_degrees = 3.0;       // uniform in [-d, d] degrees
};

struct Scene {
    PointCloud cloud;
    std::vector<int> labels;  // per-point generating segment
    std::vector<primitives::PrimitiveKind> kinds;
    std::vector<primitives::PrimitivePatch> truth;
    std::vector<std::vector<Vec3>> segments() const;
};

/// Named test scenes: "plane", "sphere", "cylinder", "cone", "wave",
/// "two_planes", "two_spheres", "trio" (plane+cylinder+sphere) and "quad"
/// (trio plus a doubly-curved spline sheet). Point counts are split
/// proportionally to surface area.
Scene make_scene(const std::string& name, int total_points, std::uint64_t seed,
                 const NoiseModel& noise = {});

std::vector<std::string> scene_names();

/// Doubly-curved open sheet: grid_n x grid_n control points over
/// [x0,x0+w] x [y0,y0+w] with a sinusoidal height field.
bspline::BSplinePatch make_wave_patch(int grid_n, double x0, double y0, double w, double z0,
                                      double amplitude, double periods);

/// Random smooth control grid for round-trip tests: a low-order polynomial
/// base surface plus bounded per-control jitter, rigidly rotated.
bspline::BSplinePatch random_smooth_patch(int rows, int cols, bool closed_u, bool closed_v,
                                          std::mt19937_64& rng, double jitter = 0.015);

/// Random surface samples with their exact parameters.
std::vector<bspline::UVSample> sample_patch(const bspline::BSplinePatch& patch, int count,
                                            std::mt19937_64& rng);

/// Jittered-grid samples: one per cell of a ceil(sqrt(count))^2 parameter
/// grid, so every knot span of moderate fits stays populated.
std::vector<bspline::UVSample> sample_patch_stratified(const bspline::BSplinePatch& patch,
                                                       int count, std::mt19937_64& rng);

/// Position + unit normal on a patch via forward-difference tangents.
void surface_frame(const bspline::BSplinePatch& patch, double u, double v, Vec3& position,
                   Vec3& normal);

}  // namespace parsefit::synth
