#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "parsefit/clustering.hpp"
#include "parsefit/embedding.hpp"
#include "parsefit/synth.hpp"

using namespace parsefit;

TEST_CASE("loading renormalizes rows and reads the header dimension") {
    std::istringstream in("2 3\n1 0 0\n0 2 0\n");
    const auto rows = embedding::load_embeddings(in);
    REQUIRE(rows.rows() == 2);
    REQUIRE(rows.cols() == 3);
    CHECK((rows.row(0) - Eigen::RowVector3d(1, 0, 0)).norm() < 1e-15);
    CHECK((rows.row(1) - Eigen::RowVector3d(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("loading rejects malformed input") {
    std::istringstream empty("");
    CHECK_THROWS(embedding::load_embeddings(empty));
    std::istringstream bad_header("2\n1 0\n0 1\n");
    CHECK_THROWS(embedding::load_embeddings(bad_header));
    std::istringstream zero_row("2 2\n1 0\n0 0\n");
    CHECK_THROWS(embedding::load_embeddings(zero_row));
    std::istringstream truncated("3 2\n1 0\n0 1\n");
    CHECK_THROWS(embedding::load_embeddings(truncated));
    std::istringstream nonfinite("1 2\nnan 1\n");
    CHECK_THROWS(embedding::load_embeddings(nonfinite));
}

TEST_CASE("save then load reproduces the matrix") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd rows(13, 5);
    for (int i = 0; i < rows.rows(); ++i) {
        for (int j = 0; j < rows.cols(); ++j) rows(i, j) = gauss(rng);
        rows.row(i).normalize();
    }
    std::stringstream buffer;
    embedding::save_embeddings(buffer, rows);
    const auto loaded = embedding::load_embeddings(buffer);
    CHECK((loaded - rows).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("geometric embedding is unit-norm, deterministic and permutation-equivariant") {
    const auto scene = synth::make_scene("trio", 400, 5);
    const auto rows = embedding::geometric_embedding(scene.cloud);
    REQUIRE(rows.rows() == 400);
    REQUIRE(rows.cols() == 6);
    for (int i = 0; i < rows.rows(); ++i) CHECK(std::abs(rows.row(i).norm() - 1.0) < 1e-10);
    CHECK((embedding::geometric_embedding(scene.cloud) - rows).norm() == 0.0);

    PointCloud reversed;
    for (std::size_t i = scene.cloud.size(); i-- > 0;) {
        reversed.positions.push_back(scene.cloud.positions[i]);
        reversed.normals.push_back(scene.cloud.normals[i]);
    }
    const auto rev_rows = embedding::geometric_embedding(reversed);
    for (int i = 0; i < rows.rows(); ++i) {
        CHECK((rev_rows.row(rows.rows() - 1 - i) - rows.row(i)).norm() == 0.0);
    }
}

TEST_CASE("identical points with identical normals embed identically") {
    PointCloud cloud;
    cloud.positions.assign(4, Vec3(0.3, -0.2, 0.9));
    cloud.normals.assign(4, Vec3(0, 0, 1));
    const auto rows = embedding::geometric_embedding(cloud);
    for (int i = 1; i < 4; ++i) CHECK((rows.row(i) - rows.row(0)).norm() == 0.0);
}

TEST_CASE("antipodal normals embed identically") {
    PointCloud cloud;
    cloud.positions.assign(2, Vec3(0.5, 0.5, 0.5));
    cloud.normals = {Vec3(0, 0, 1), Vec3(0, 0, -1)};
    const auto rows = embedding::geometric_embedding(cloud);
    CHECK((rows.row(0) - rows.row(1)).norm() == 0.0);
}

TEST_CASE("normals are required when the normal scale is positive") {
    PointCloud cloud;
    cloud.positions = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
    CHECK_THROWS_AS(embedding::geometric_embedding(cloud, 1.0, 1.0), std::invalid_argument);
    CHECK_NOTHROW(embedding::geometric_embedding(cloud, 1.0, 0.0));
}

TEST_CASE("two parallel planes produce exactly two clusters downstream") {
    const auto scene = synth::make_scene("two_planes", 1000, 9, {0.0, 0.0});
    const auto rows = embedding::geometric_embedding(scene.cloud, 1.0, 1.0);
    const auto beta = clustering::estimate_bandwidth(rows, 150);
    const auto shifted = clustering::mean_shift(rows, beta);
    const auto clusters = clustering::extract_clusters(shifted.modes, rows, beta);
    CHECK(clusters.centers.rows() == 2);
    // nearly all points follow the generator partition (up to id swap)
    int agree = 0;
    for (std::size_t i = 0; i < scene.labels.size(); ++i) {
        agree += (clusters.hard_labels[static_cast<int>(i)] == scene.labels[i]) ? 1 : 0;
    }
    const int n = static_cast<int>(scene.labels.size());
    CHECK(std::max(agree, n - agree) >= static_cast<int>(0.95 * n));
}
