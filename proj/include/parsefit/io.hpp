#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "parsefit/metrics.hpp"
#include "parsefit/pipeline.hpp"
#include "parsefit/types.hpp"

namespace parsefit::io {

/// Text point cloud: one point per line, "x y z" or "x y z nx ny nz"
/// (consistent across the file), '#' lines ignored. Normals are
/// renormalized to unit length.
PointCloud read_point_cloud(std::istream& in);
PointCloud read_point_cloud(const std::string& path);
void write_point_cloud(std::ostream& out, const PointCloud& cloud);

nlohmann::json patch_to_json(const primitives::PrimitivePatch& patch);
primitives::PrimitivePatch patch_from_json(const nlohmann::json& j);

nlohmann::json patch_set_to_json(const pipeline::SurfacePatchSet& set,
                                 const pipeline::PipelineConfig& config);
pipeline::SurfacePatchSet patch_set_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const pipeline::PipelineConfig& config);
/// Strict: unknown keys are rejected.
pipeline::PipelineConfig config_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const metrics::MetricsReport& report);

/// ASCII OBJ with one object per patch; quad faces over a 40x40 parameter
/// grid, dropping faces whose corners all fall outside the trim mask.
void write_obj(std::ostream& out, const pipeline::SurfacePatchSet& set, const PointCloud& cloud,
               int nu = 40, int nv = 40, double trim_epsilon = 0.1);

}  // namespace parsefit::io
