#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "oracles.hpp"
#include "parsefit/clustering.hpp"

using namespace parsefit;
using clustering::Bandwidth;

namespace {

constexpr double kPi = std::numbers::pi;

// points drawn around unit centers, renormalized to the sphere
Eigen::MatrixXd cap_mixture(const std::vector<Vec3>& centers, int per_cap, double sigma,
                            std::mt19937_64& rng, std::vector<int>* labels = nullptr) {
    std::normal_distribution<double> gauss(0.0, sigma);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(centers.size()) * per_cap, 3);
    int r = 0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        for (int i = 0; i < per_cap; ++i, ++r) {
            Vec3 p = centers[k] + Vec3(gauss(rng), gauss(rng), gauss(rng));
            p.normalize();
            rows.row(r) = p.transpose();
            if (labels) labels->push_back(static_cast<int>(k));
        }
    }
    return rows;
}

// independent mode finder: dense sphere grid, then finite-difference
// ascent of the kernel density along the tangent plane
Vec3 density_ascent_mode(const Eigen::MatrixXd& anchors, double beta, const Vec3& region_hint) {
    const double inv_b2 = 1.0 / (beta * beta);
    const auto density = [&](const Vec3& z) {
        double sum = 0.0;
        for (int j = 0; j < anchors.rows(); ++j) {
            sum += std::exp((z.dot(anchors.row(j).transpose()) - 1.0) * inv_b2);
        }
        return sum;
    };
    Vec3 best = region_hint;
    double best_density = -1.0;
    for (double theta = 0.0; theta <= kPi; theta += 0.01) {
        for (double phi = 0.0; phi < 2.0 * kPi; phi += 0.01) {
            const Vec3 z(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                         std::cos(theta));
            if (z.dot(region_hint) < 0.5) continue;  // stay within the cap's half-space
            const double d = density(z);
            if (d > best_density) {
                best_density = d;
                best = z;
            }
        }
    }
    double step = 0.01;
    while (step > 1e-10) {
        const Vec3 e1 = best.unitOrthogonal();
        const Vec3 e2 = best.cross(e1);
        bool moved = false;
        for (const Vec3& dir : {e1, Vec3(-e1), e2, Vec3(-e2)}) {
            const Vec3 cand = (best + step * dir).normalized();
            const double d = density(cand);
            if (d > best_density) {
                best_density = d;
                best = cand;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }
    return best;
}

}  // namespace

TEST_CASE("bandwidth of two orthogonal unit rows is sqrt(2)") {
    Eigen::MatrixXd rows(2, 2);
    rows << 1, 0, 0, 1;
    const auto beta = clustering::estimate_bandwidth(rows, 150);
    CHECK(beta.beta == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("identical rows clamp to the bandwidth floor") {
    Eigen::MatrixXd rows(5, 3);
    for (int i = 0; i < 5; ++i) rows.row(i) = Eigen::RowVector3d(1, 0, 0);
    const auto beta = clustering::estimate_bandwidth(rows, 150);
    CHECK(beta.beta == doctest::Approx(1e-4));
}

TEST_CASE("bandwidth estimation requires two rows") {
    Eigen::MatrixXd one(1, 3);
    one << 1, 0, 0;
    CHECK_THROWS_AS(clustering::estimate_bandwidth(one, 150), std::invalid_argument);
}

TEST_CASE("bandwidth matches exhaustive neighbor search on antipodal caps") {
    std::mt19937_64 rng(11);
    const auto rows = cap_mixture({Vec3::UnitZ(), -Vec3::UnitZ()}, 250, 0.05, rng);
    const auto beta = clustering::estimate_bandwidth(rows, 150);
    const auto ref = oracles::brute_rank_distance(rows, 150);
    CHECK(beta.beta == doctest::Approx(ref.mean()).epsilon(1e-9));
    // within-cap scale, far below the antipodal separation
    CHECK(beta.beta < 0.5);
}

TEST_CASE("identical rows are a mean-shift fixed point") {
    Eigen::MatrixXd rows(6, 3);
    for (int i = 0; i < 6; ++i) rows.row(i) = Eigen::RowVector3d(0, 1, 0);
    const auto result = clustering::mean_shift(rows, Bandwidth{0.5});
    CHECK(result.iterations == 1);
    CHECK((result.modes - rows).norm() == 0.0);
}

TEST_CASE("mean-shift keeps rows on the unit sphere every iteration") {
    std::mt19937_64 rng(13);
    const auto rows = cap_mixture({Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, 60, 0.08, rng);
    const auto beta = clustering::estimate_bandwidth(rows, 20);
    for (int iters = 1; iters <= 8; ++iters) {
        const auto result = clustering::mean_shift(rows, beta, iters, 0.0);
        for (int i = 0; i < result.modes.rows(); ++i) {
            CHECK(std::abs(result.modes.row(i).norm() - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("well-separated caps converge to their density modes") {
    std::mt19937_64 rng(17);
    const std::vector<Vec3> centers = {Vec3::UnitZ(),
                                       Vec3(std::sin(2.2), 0.0, std::cos(2.2))};
    std::vector<int> labels;
    const auto rows = cap_mixture(centers, 120, 0.05, rng, &labels);
    const Bandwidth beta{0.25};
    const auto result = clustering::mean_shift(rows, beta, 200, 1e-9);

    for (std::size_t k = 0; k < centers.size(); ++k) {
        const Vec3 mode = density_ascent_mode(rows, beta.beta, centers[k]);
        for (int i = 0; i < result.modes.rows(); ++i) {
            if (labels[static_cast<std::size_t>(i)] != static_cast<int>(k)) continue;
            CHECK((result.modes.row(i).transpose() - mode).norm() < 1e-4);
        }
    }
}

TEST_CASE("a single tight cluster yields one center and all-zero labels") {
    std::mt19937_64 rng(19);
    const auto rows = cap_mixture({Vec3::UnitX()}, 80, 0.02, rng);
    const auto beta = clustering::estimate_bandwidth(rows, 20);
    const auto shifted = clustering::mean_shift(rows, beta);
    const auto clusters = clustering::extract_clusters(shifted.modes, rows, beta, shifted.iterations);
    CHECK(clusters.centers.rows() == 1);
    for (int i = 0; i < clusters.hard_labels.size(); ++i) CHECK(clusters.hard_labels[i] == 0);
    CHECK(clusters.iterations_run == shifted.iterations);
}

TEST_CASE("two separated caps are recovered exactly") {
    std::mt19937_64 rng(23);
    std::vector<int> labels;
    const auto rows = cap_mixture({Vec3::UnitZ(), -Vec3::UnitZ()}, 150, 0.04, rng, &labels);
    const auto beta = clustering::estimate_bandwidth(rows, 100);
    const auto shifted = clustering::mean_shift(rows, beta);
    const auto clusters = clustering::extract_clusters(shifted.modes, rows, beta);
    REQUIRE(clusters.centers.rows() == 2);
    // labels match the generator partition up to a cluster id swap
    int flips = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        flips += clusters.hard_labels[static_cast<int>(i)] != labels[i] ? 1 : 0;
    }
    CHECK((flips == 0 || flips == static_cast<int>(labels.size())));
}

TEST_CASE("density ties break toward the lower point index") {
    Eigen::MatrixXd rows(4, 2);
    rows << 1, 0, 1, 0, 0, 1, 0, 1;  // two identical pairs, symmetric densities
    const Bandwidth beta{0.3};
    const auto clusters = clustering::extract_clusters(rows, rows, beta);
    REQUIRE(clusters.centers.rows() == 2);
    // the surviving representatives must be rows 0 and 2
    CHECK((clusters.centers.row(0) - rows.row(0)).norm() == 0.0);
    CHECK((clusters.centers.row(1) - rows.row(2)).norm() == 0.0);
    CHECK(clusters.hard_labels[0] == clusters.hard_labels[1]);
    CHECK(clusters.hard_labels[2] == clusters.hard_labels[3]);
}

TEST_CASE("hard labels equal the argmax of soft memberships") {
    std::mt19937_64 rng(29);
    std::vector<int> labels;
    const auto rows =
        cap_mixture({Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, 70, 0.06, rng, &labels);
    const auto beta = clustering::estimate_bandwidth(rows, 50);
    const auto shifted = clustering::mean_shift(rows, beta);
    const auto clusters = clustering::extract_clusters(shifted.modes, rows, beta);
    const auto soft = clustering::soft_membership(shifted.modes, clusters.centers, beta);
    REQUIRE(soft.rows() == rows.rows());
    for (int i = 0; i < soft.rows(); ++i) {
        CHECK(soft.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
        int argmax = 0;
        soft.row(i).maxCoeff(&argmax);
        CHECK(argmax == clusters.hard_labels[i]);
    }
}

TEST_CASE("single-center soft membership is all ones") {
    Eigen::MatrixXd rows(3, 2);
    rows << 1, 0, 0, 1, 1, 0;
    Eigen::MatrixXd center(1, 2);
    center << 1, 0;
    const auto soft = clustering::soft_membership(rows, center, Bandwidth{0.7});
    for (int i = 0; i < 3; ++i) CHECK(soft(i, 0) == doctest::Approx(1.0));
}

TEST_CASE("soft membership matches the direct kernel ratio") {
    // point coincident with center 0, remaining centers orthogonal, beta = 1
    const int k = 4;
    Eigen::MatrixXd centers = Eigen::MatrixXd::Identity(k, k);
    Eigen::MatrixXd point(1, k);
    point.setZero();
    point(0, 0) = 1.0;
    const auto soft = clustering::soft_membership(point, centers, Bandwidth{1.0});
    const double e = std::exp(1.0);
    CHECK(soft(0, 0) == doctest::Approx(e / (e + (k - 1))).epsilon(1e-12));
    for (int j = 1; j < k; ++j) {
        CHECK(soft(0, j) == doctest::Approx(1.0 / (e + (k - 1))).epsilon(1e-12));
    }
}

TEST_CASE("membership grows strictly with the center dot product") {
    Eigen::MatrixXd centers(2, 3);
    centers << 1, 0, 0, 0, 1, 0;
    const Bandwidth beta{0.5};
    double previous = -1.0;
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        Eigen::MatrixXd z(1, 3);
        z << std::cos(t), std::sin(t), 0;  // moves toward center 1
        const auto soft = clustering::soft_membership(z, centers, beta);
        CHECK(soft(0, 1) > previous);
        previous = soft(0, 1);
    }
}

TEST_CASE("permuting inputs permutes hard labels consistently") {
    std::mt19937_64 rng(31);
    std::vector<int> labels;
    const auto rows = cap_mixture({Vec3::UnitZ(), -Vec3::UnitZ()}, 100, 0.05, rng, &labels);
    const auto beta = clustering::estimate_bandwidth(rows, 60);
    const auto base = clustering::extract_clusters(
        clustering::mean_shift(rows, beta).modes, rows, beta);

    Eigen::MatrixXd reversed(rows.rows(), rows.cols());
    for (int i = 0; i < rows.rows(); ++i) reversed.row(i) = rows.row(rows.rows() - 1 - i);
    const auto perm = clustering::extract_clusters(
        clustering::mean_shift(reversed, beta).modes, reversed, beta);

    REQUIRE(base.centers.rows() == perm.centers.rows());
    // consistent up to relabeling by first occurrence
    std::vector<int> remap(static_cast<std::size_t>(base.centers.rows()), -1);
    for (int i = 0; i < rows.rows(); ++i) {
        const int a = base.hard_labels[rows.rows() - 1 - i];
        const int b = perm.hard_labels[i];
        if (remap[static_cast<std::size_t>(a)] < 0) remap[static_cast<std::size_t>(a)] = b;
        CHECK(remap[static_cast<std::size_t>(a)] == b);
    }
}

TEST_CASE("mean-shift rejects invalid arguments") {
    Eigen::MatrixXd rows(2, 2);
    rows << 1, 0, 0, 1;
    CHECK_THROWS_AS(clustering::mean_shift(rows, Bandwidth{0.0}), std::invalid_argument);
    CHECK_THROWS_AS(clustering::mean_shift(rows, Bandwidth{0.5}, 0), std::invalid_argument);
    CHECK_THROWS_AS(
        clustering::extract_clusters(Eigen::MatrixXd::Ones(3, 2), rows, Bandwidth{0.5}),
        std::invalid_argument);
}
