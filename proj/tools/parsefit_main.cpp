#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "parsefit/io.hpp"
#include "parsefit/metrics.hpp"
#include "parsefit/pipeline.hpp"
#include "parsefit/ransac.hpp"
#include "parsefit/synth.hpp"

namespace {

using namespace parsefit;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitFitFailure = 2;

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

int run_fit(const std::string& input, const std::string& embeddings, const std::string& config_path,
            const std::string& output, const std::string& mesh, std::uint64_t seed, bool has_seed) {
    pipeline::PipelineConfig config;
    if (!config_path.empty()) config = io::config_from_json(load_json(config_path));
    if (!embeddings.empty()) {
        config.embedding_source = "file";
        config.embedding_file = embeddings;
    }
    if (has_seed) config.seed = seed;
    const PointCloud cloud = io::read_point_cloud(input);
    const auto result = pipeline::decompose(cloud, config);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    save_json(output, io::patch_set_to_json(result.patch_set, config));
    if (!mesh.empty()) {
        std::ofstream obj(mesh);
        if (!obj) throw std::runtime_error("cannot write " + mesh);
        io::write_obj(obj, result.patch_set, cloud);
    }
    std::cerr << result.patch_set.patches.size() << " patches";
    for (const auto& [stage, secs] : result.timings_seconds) std::cerr << ", " << stage << " " << secs << "s";
    std::cerr << '\n';
    return 0;
}

metrics::SegmentLabeling labeling_from_set(const pipeline::SurfacePatchSet& set, std::size_t n,
                                           bool allow_uncovered) {
    std::vector<int> labels(n, -1);
    std::vector<primitives::PrimitiveKind> types;
    for (std::size_t k = 0; k < set.patches.size(); ++k) {
        types.push_back(set.patches[k].kind);
        for (int i : set.patches[k].indices) {
            if (i < 0 || i >= static_cast<int>(n)) {
                throw std::runtime_error("patch point index out of range");
            }
            labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
        }
    }
    if (!allow_uncovered) {
        for (int l : labels) {
            if (l < 0) throw std::runtime_error("labeling does not cover every point");
        }
    }
    return metrics::SegmentLabeling::from_labels(std::move(labels), std::move(types));
}

int run_eval(const std::string& pred_path, const std::string& truth_path,
             const std::string& points_path, const std::string& report_path) {
    const PointCloud cloud = io::read_point_cloud(points_path);
    const auto pred = io::patch_set_from_json(load_json(pred_path));
    const auto truth = io::patch_set_from_json(load_json(truth_path));
    const auto pred_labels = labeling_from_set(pred, cloud.size(), true);
    const auto truth_labels = labeling_from_set(truth, cloud.size(), false);

    metrics::MetricsReport report;
    report.matched_pairs = metrics::match_segments(pred_labels, truth_labels);
    report.seg_miou = metrics::seg_miou(pred_labels, truth_labels);
    report.label_miou = metrics::label_miou(pred_labels, truth_labels);

    std::vector<primitives::PrimitivePatch> pred_patches;
    std::vector<std::vector<Vec3>> pred_segments;
    for (const auto& entry : pred.patches) {
        pred_patches.push_back(entry.patch);
        auto& seg = pred_segments.emplace_back();
        for (int i : entry.indices) seg.push_back(cloud.positions[static_cast<std::size_t>(i)]);
    }
    std::vector<std::vector<Vec3>> truth_segments(truth.patches.size());
    for (std::size_t k = 0; k < truth.patches.size(); ++k) {
        for (int i : truth.patches[k].indices) {
            truth_segments[k].push_back(cloud.positions[static_cast<std::size_t>(i)]);
        }
    }
    report.residual = metrics::residual_error(pred_patches, truth_segments, report.matched_pairs);
    report.p_coverage = metrics::p_coverage(cloud.positions, pred_patches);
    const auto reconstructed =
        metrics::reconstruct_samples(pred_patches, pred_segments, 10000, 0.1, pred.seed);
    const auto chamfer = metrics::chamfer_distance(reconstructed, cloud.positions);
    report.p_cover = chamfer.p_cover;
    report.s_cover = chamfer.s_cover;
    report.chamfer = chamfer.chamfer;

    save_json(report_path, io::report_to_json(report));
    std::cerr << "seg_miou " << report.seg_miou << ", label_miou " << report.label_miou
              << ", residual " << report.residual << ", p_coverage " << report.p_coverage
              << ", chamfer " << report.chamfer << '\n';
    return 0;
}

int run_splinefit(const std::string& input, const std::string& grid_spec, bool closed_u,
                  bool closed_v, const std::string& output) {
    int rows = 0, cols = 0;
    if (std::sscanf(grid_spec.c_str(), "%dx%d", &rows, &cols) != 2 || rows < 4 || cols < 4) {
        std::cerr << "error: --grid expects PxQ with P,Q >= 4\n";
        return kExitUsage;
    }
    const PointCloud cloud = io::read_point_cloud(input);
    const auto uv = bspline::init_parametrization(cloud.positions);
    std::vector<bspline::UVSample> samples(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) samples[i] = {uv[i], cloud.positions[i]};
    const auto grid = bspline::fit_control_grid(samples, rows, cols, closed_u, closed_v);
    pipeline::SurfacePatchSet set;
    pipeline::PatchEntry entry;
    entry.kind = (closed_u || closed_v) ? primitives::PrimitiveKind::closed_bspline
                                        : primitives::PrimitiveKind::open_bspline;
    entry.patch = {entry.kind, bspline::make_patch(grid)};
    entry.indices.resize(cloud.size());
    std::iota(entry.indices.begin(), entry.indices.end(), 0);
    set.patches.push_back(std::move(entry));
    save_json(output, io::patch_set_to_json(set, pipeline::PipelineConfig{}));
    const auto& patch = std::get<bspline::BSplinePatch>(set.patches[0].patch.shape);
    std::cerr << "fitted " << rows << "x" << cols << " grid, chamfer "
              << bspline::patch_chamfer(patch, cloud.positions) << '\n';
    return 0;
}

int run_ransac(const std::string& input, const std::string& output, const ransac::RansacConfig& config) {
    const PointCloud cloud = io::read_point_cloud(input);
    const auto detections = ransac::detect_primitives(cloud, config);
    pipeline::SurfacePatchSet set;
    for (const auto& d : detections) {
        set.patches.push_back({d.patch, d.inlier_indices, d.patch.kind});
    }
    set.seed = config.seed;
    json j = io::patch_set_to_json(set, pipeline::PipelineConfig{});
    j["config"] = {{"inlier_epsilon", config.inlier_epsilon},
                   {"normal_epsilon", config.normal_epsilon},
                   {"min_inliers", config.min_inliers},
                   {"max_candidates_per_round", config.max_candidates_per_round},
                   {"restarts", config.restarts},
                   {"seed", config.seed}};
    save_json(output, j);
    std::size_t covered = 0;
    for (const auto& d : detections) covered += d.inlier_indices.size();
    std::cerr << detections.size() << " primitives, coverage "
              << static_cast<double>(covered) / static_cast<double>(cloud.size()) << '\n';
    return 0;
}

int run_synth(const std::string& scene_name, const std::string& output, std::uint64_t seed,
              int points, const std::string& truth_path) {
    const auto scene = synth::make_scene(scene_name, points, seed);
    std::ofstream out(output);
    if (!out) throw std::runtime_error("cannot write " + output);
    io::write_point_cloud(out, scene.cloud);
    if (!truth_path.empty()) {
        pipeline::SurfacePatchSet truth;
        truth.seed = seed;
        for (std::size_t k = 0; k < scene.truth.size(); ++k) {
            pipeline::PatchEntry entry;
            entry.patch = scene.truth[k];
            entry.kind = scene.kinds[k];
            for (std::size_t i = 0; i < scene.labels.size(); ++i) {
                if (scene.labels[i] == static_cast<int>(k)) {
                    entry.indices.push_back(static_cast<int>(i));
                }
            }
            truth.patches.push_back(std::move(entry));
        }
        save_json(truth_path, io::patch_set_to_json(truth, pipeline::PipelineConfig{}));
    }
    std::cerr << "wrote " << scene.cloud.size() << " points, " << scene.truth.size()
              << " ground-truth patches\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parsefit: parametric surface patch decomposition for 3D point clouds"};
    app.require_subcommand(1);

    auto* fit = app.add_subcommand("fit", "decompose a point cloud into surface patches");
    std::string fit_input, fit_embeddings, fit_config, fit_output, fit_mesh;
    std::uint64_t fit_seed = 0;
    fit->add_option("--input", fit_input, "point cloud file")->required();
    fit->add_option("--embeddings", fit_embeddings, "per-point embedding file");
    fit->add_option("--config", fit_config, "pipeline config JSON");
    fit->add_option("--output", fit_output, "output patches JSON")->required();
    fit->add_option("--mesh", fit_mesh, "optional OBJ export");
    auto* seed_opt = fit->add_option("--seed", fit_seed, "master seed");

    auto* eval = app.add_subcommand("eval", "score predicted patches against ground truth");
    std::string eval_pred, eval_truth, eval_points, eval_report;
    eval->add_option("--pred", eval_pred, "predicted patches JSON")->required();
    eval->add_option("--truth", eval_truth, "ground-truth patches JSON")->required();
    eval->add_option("--points", eval_points, "input point cloud")->required();
    eval->add_option("--report", eval_report, "output metrics JSON")->required();

    auto* splinefit = app.add_subcommand("splinefit", "fit one B-spline patch to a point cloud");
    std::string sf_input, sf_grid = "20x20", sf_output;
    bool sf_closed_u = false, sf_closed_v = false;
    splinefit->add_option("--input", sf_input, "point cloud file")->required();
    splinefit->add_option("--grid", sf_grid, "control grid PxQ (default 20x20)");
    splinefit->add_flag("--closed-u", sf_closed_u, "wrap the u direction");
    splinefit->add_flag("--closed-v", sf_closed_v, "wrap the v direction");
    splinefit->add_option("--output", sf_output, "output patch JSON")->required();

    auto* rans = app.add_subcommand("ransac", "sequential RANSAC primitive detection");
    std::string r_input, r_output;
    ransac::RansacConfig r_config;
    rans->add_option("--input", r_input, "point cloud file with normals")->required();
    rans->add_option("--output", r_output, "output patches JSON")->required();
    rans->add_option("--seed", r_config.seed, "random seed");
    rans->add_option("--epsilon", r_config.inlier_epsilon, "inlier distance threshold");
    rans->add_option("--min-inliers", r_config.min_inliers, "minimum inliers per primitive");
    rans->add_option("--restarts", r_config.restarts, "independent runs, best coverage wins");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic test scene");
    std::string sy_scene, sy_output, sy_truth;
    std::uint64_t sy_seed = 0;
    int sy_points = 10000;
    synth_cmd->add_option("--scene", sy_scene, "scene name")->required();
    synth_cmd->add_option("--output", sy_output, "output point cloud file")->required();
    synth_cmd->add_option("--seed", sy_seed, "random seed");
    synth_cmd->add_option("--points", sy_points, "total point count");
    synth_cmd->add_option("--truth", sy_truth, "also write ground-truth patches JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*fit) {
            return run_fit(fit_input, fit_embeddings, fit_config, fit_output, fit_mesh, fit_seed,
                           seed_opt->count() > 0);
        }
        if (*eval) return run_eval(eval_pred, eval_truth, eval_points, eval_report);
        if (*splinefit) {
            return run_splinefit(sf_input, sf_grid, sf_closed_u, sf_closed_v, sf_output);
        }
        if (*rans) return run_ransac(r_input, r_output, r_config);
        if (*synth_cmd) {
            if (sy_points < 1) {
                std::cerr << "error: --points must be positive\n";
                return kExitUsage;
            }
            return run_synth(sy_scene, sy_output, sy_seed, sy_points, sy_truth);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFitFailure;
    }
    return kExitUsage;
}
