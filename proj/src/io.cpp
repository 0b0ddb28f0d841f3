#include "parsefit/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "parsefit/postprocess.hpp"

namespace parsefit::io {

using nlohmann::json;
using primitives::PrimitiveKind;

PointCloud read_point_cloud(std::istream& in) {
    PointCloud cloud;
    std::string line;
    int columns = 0;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        double v[6];
        int got = 0;
        while (got < 6 && (ls >> v[got])) ++got;
        if (got != 3 && got != 6) {
            throw std::runtime_error("point cloud: line " + std::to_string(lineno) +
                                     ": expected 3 or 6 values");
        }
        if (columns == 0) columns = got;
        if (got != columns) {
            throw std::runtime_error("point cloud: line " + std::to_string(lineno) +
                                     ": inconsistent column count");
        }
        for (int i = 0; i < got; ++i) {
            if (!std::isfinite(v[i])) {
                throw std::runtime_error("point cloud: line " + std::to_string(lineno) +
                                         ": non-finite value");
            }
        }
        cloud.positions.emplace_back(v[0], v[1], v[2]);
        if (got == 6) {
            Vec3 n(v[3], v[4], v[5]);
            const double len = n.norm();
            if (len < 1e-9) {
                throw std::runtime_error("point cloud: line " + std::to_string(lineno) +
                                         ": zero normal");
            }
            cloud.normals.push_back(n / len);
        }
    }
    if (cloud.positions.empty()) throw std::runtime_error("point cloud: no points");
    return cloud;
}

PointCloud read_point_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("point cloud: cannot open " + path);
    return read_point_cloud(in);
}

void write_point_cloud(std::ostream& out, const PointCloud& cloud) {
    out.precision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.positions[i];
        out << p.x() << ' ' << p.y() << ' ' << p.z();
        if (cloud.has_normals()) {
            const Vec3& n = cloud.normals[i];
            out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
        }
        out << '\n';
    }
}

namespace {

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::runtime_error("patches: expected [x,y,z]");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

json patch_to_json(const primitives::PrimitivePatch& patch) {
    json params;
    switch (patch.kind) {
        case PrimitiveKind::plane: {
            const auto& p = std::get<primitives::Plane>(patch.shape);
            params = {{"normal", vec_to_json(p.normal)}, {"offset", p.offset}};
            break;
        }
        case PrimitiveKind::sphere: {
            const auto& s = std::get<primitives::Sphere>(patch.shape);
            params = {{"center", vec_to_json(s.center)}, {"radius", s.radius}};
            break;
        }
        case PrimitiveKind::cylinder: {
            const auto& c = std::get<primitives::Cylinder>(patch.shape);
            params = {{"center", vec_to_json(c.center)},
                      {"direction", vec_to_json(c.direction)},
                      {"radius", c.radius}};
            break;
        }
        case PrimitiveKind::cone: {
            const auto& c = std::get<primitives::Cone>(patch.shape);
            params = {{"apex", vec_to_json(c.apex)},
                      {"direction", vec_to_json(c.direction)},
                      {"half_angle", c.half_angle}};
            break;
        }
        default: {
            const auto& b = std::get<bspline::BSplinePatch>(patch.shape);
            json controls = json::array();
            for (const Vec3& c : b.grid.points) controls.push_back(vec_to_json(c));
            params = {{"grid_rows", b.grid.rows},
                      {"grid_cols", b.grid.cols},
                      {"closed_u", b.grid.closed_u},
                      {"closed_v", b.grid.closed_v},
                      {"control_points", std::move(controls)},
                      {"knots_u", b.knots_u.values},
                      {"knots_v", b.knots_v.values}};
            break;
        }
    }
    return {{"kind", std::string(primitives::kind_name(patch.kind))},
            {"params", std::move(params)}};
}

primitives::PrimitivePatch patch_from_json(const json& j) {
    const PrimitiveKind kind = primitives::kind_from_name(j.at("kind").get<std::string>());
    const json& params = j.at("params");
    primitives::PrimitivePatch patch;
    patch.kind = kind;
    switch (kind) {
        case PrimitiveKind::plane: {
            primitives::Plane p;
            p.normal = vec_from_json(params.at("normal")).normalized();
            p.offset = params.at("offset").get<double>();
            patch.shape = p;
            break;
        }
        case PrimitiveKind::sphere: {
            primitives::Sphere s;
            s.center = vec_from_json(params.at("center"));
            s.radius = params.at("radius").get<double>();
            patch.shape = s;
            break;
        }
        case PrimitiveKind::cylinder: {
            primitives::Cylinder c;
            c.center = vec_from_json(params.at("center"));
            c.direction = vec_from_json(params.at("direction")).normalized();
            c.radius = params.at("radius").get<double>();
            patch.shape = c;
            break;
        }
        case PrimitiveKind::cone: {
            primitives::Cone c;
            c.apex = vec_from_json(params.at("apex"));
            c.direction = vec_from_json(params.at("direction")).normalized();
            c.half_angle = params.at("half_angle").get<double>();
            patch.shape = c;
            break;
        }
        default: {
            bspline::ControlGrid grid(params.at("grid_rows").get<int>(),
                                      params.at("grid_cols").get<int>(),
                                      params.at("closed_u").get<bool>(),
                                      params.at("closed_v").get<bool>());
            const json& controls = params.at("control_points");
            if (controls.size() != grid.points.size()) {
                throw std::runtime_error("patches: control point count mismatch");
            }
            for (std::size_t i = 0; i < grid.points.size(); ++i) {
                grid.points[i] = vec_from_json(controls[i]);
            }
            bspline::BSplinePatch b = bspline::make_patch(std::move(grid));
            if (params.contains("knots_u")) {
                b.knots_u.values = params.at("knots_u").get<std::vector<double>>();
                b.knots_v.values = params.at("knots_v").get<std::vector<double>>();
            }
            patch.shape = std::move(b);
            break;
        }
    }
    return patch;
}

json patch_set_to_json(const pipeline::SurfacePatchSet& set,
                       const pipeline::PipelineConfig& config) {
    json patches = json::array();
    for (const auto& entry : set.patches) {
        json p = patch_to_json(entry.patch);
        p["point_indices"] = entry.indices;
        patches.push_back(std::move(p));
    }
    return {{"patches", std::move(patches)}, {"config", config_to_json(config)}};
}

pipeline::SurfacePatchSet patch_set_from_json(const json& j) {
    pipeline::SurfacePatchSet set;
    for (const json& p : j.at("patches")) {
        pipeline::PatchEntry entry;
        entry.patch = patch_from_json(p);
        entry.kind = entry.patch.kind;
        if (p.contains("point_indices")) {
            entry.indices = p.at("point_indices").get<std::vector<int>>();
        }
        set.patches.push_back(std::move(entry));
    }
    if (j.contains("config") && j.at("config").contains("seed")) {
        set.seed = j.at("config").at("seed").get<std::uint64_t>();
    }
    return set;
}

json config_to_json(const pipeline::PipelineConfig& c) {
    return {{"embedding_source", c.embedding_source},
            {"embedding_file", c.embedding_file},
            {"scale_position", c.scale_position},
            {"scale_normal", c.scale_normal},
            {"bandwidth_rank", c.bandwidth_rank},
            {"bandwidth_floor", c.bandwidth_floor},
            {"mean_shift_iterations", c.mean_shift_iterations},
            {"mean_shift_tolerance", c.mean_shift_tolerance},
            {"min_segment_size", c.min_segment_size},
            {"spline_grid", c.spline_grid},
            {"standardize_cd_threshold", c.standardize_cd_threshold},
            {"refine", c.refine},
            {"refine_tolerance", c.refine_tolerance},
            {"refine_min_grid", c.refine_min_grid},
            {"refine_max_grid", c.refine_max_grid},
            {"match_max_points", c.match_max_points},
            {"arap", c.arap},
            {"arap_iterations", c.arap_iterations},
            {"classify_lambda", c.classify_lambda},
            {"closed_seam_fraction", c.closed_seam_fraction},
            {"cd_samples_per_shape", c.cd_samples_per_shape},
            {"spline_distance_samples", c.spline_distance_samples},
            {"seed", c.seed}};
}

pipeline::PipelineConfig config_from_json(const json& j) {
    pipeline::PipelineConfig c;
    const json defaults = config_to_json(c);
    for (const auto& [key, value] : j.items()) {
        if (!defaults.contains(key)) {
            throw std::runtime_error("config: unknown key \"" + key + "\"");
        }
        (void)value;
    }
    const auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("embedding_source", c.embedding_source);
    get("embedding_file", c.embedding_file);
    get("scale_position", c.scale_position);
    get("scale_normal", c.scale_normal);
    get("bandwidth_rank", c.bandwidth_rank);
    get("bandwidth_floor", c.bandwidth_floor);
    get("mean_shift_iterations", c.mean_shift_iterations);
    get("mean_shift_tolerance", c.mean_shift_tolerance);
    get("min_segment_size", c.min_segment_size);
    get("spline_grid", c.spline_grid);
    get("standardize_cd_threshold", c.standardize_cd_threshold);
    get("refine", c.refine);
    get("refine_tolerance", c.refine_tolerance);
    get("refine_min_grid", c.refine_min_grid);
    get("refine_max_grid", c.refine_max_grid);
    get("match_max_points", c.match_max_points);
    get("arap", c.arap);
    get("arap_iterations", c.arap_iterations);
    get("classify_lambda", c.classify_lambda);
    get("closed_seam_fraction", c.closed_seam_fraction);
    get("cd_samples_per_shape", c.cd_samples_per_shape);
    get("spline_distance_samples", c.spline_distance_samples);
    get("seed", c.seed);
    c.validate();
    return c;
}

json report_to_json(const metrics::MetricsReport& report) {
    json pairs = json::array();
    for (const auto& [p, t] : report.matched_pairs) pairs.push_back(json::array({p, t}));
    return {{"seg_miou", report.seg_miou},
            {"label_miou", report.label_miou},
            {"residual", report.residual},
            {"p_coverage", report.p_coverage},
            {"p_cover", report.p_cover},
            {"s_cover", report.s_cover},
            {"chamfer", report.chamfer},
            {"matched_pairs", std::move(pairs)}};
}

void write_obj(std::ostream& out, const pipeline::SurfacePatchSet& set, const PointCloud& cloud,
               int nu, int nv, double trim_epsilon) {
    out << "# parsefit patch export\n";
    out.precision(9);
    int vertex_base = 1;
    for (std::size_t k = 0; k < set.patches.size(); ++k) {
        const auto& entry = set.patches[k];
        std::vector<Vec3> segment;
        segment.reserve(entry.indices.size());
        for (int i : entry.indices) segment.push_back(cloud.positions[static_cast<std::size_t>(i)]);

        std::vector<Vec3> verts;
        std::vector<std::array<int, 4>> quads;
        if (std::holds_alternative<bspline::BSplinePatch>(entry.patch.shape)) {
            const auto mesh = postprocess::tessellate(
                std::get<bspline::BSplinePatch>(entry.patch.shape), nu, nv);
            verts = mesh.vertices;
            quads = mesh.quads;
        } else {
            verts = primitives::uv_grid_samples(entry.patch, segment, nu, nv);
            for (int iu = 0; iu + 1 < nu; ++iu) {
                for (int iv = 0; iv + 1 < nv; ++iv) {
                    quads.push_back({iu * nv + iv, (iu + 1) * nv + iv, (iu + 1) * nv + iv + 1,
                                     iu * nv + iv + 1});
                }
            }
        }
        const auto mask = segment.empty()
                              ? std::vector<char>(verts.size(), 1)
                              : primitives::trim_inlier_mask(segment, verts, trim_epsilon);
        out << "o patch_" << k << "_" << primitives::kind_name(entry.kind) << '\n';
        for (const Vec3& v : verts) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
        for (const auto& q : quads) {
            bool kept = true;
            for (int c : q) kept = kept && mask[static_cast<std::size_t>(c)];
            if (!kept) continue;
            out << "f " << vertex_base + q[0] << ' ' << vertex_base + q[1] << ' '
                << vertex_base + q[2] << ' ' << vertex_base + q[3] << '\n';
        }
        vertex_base += static_cast<int>(verts.size());
    }
}

}  // namespace parsefit::io
