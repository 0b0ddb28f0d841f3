// Times the OpenMP kernels against their serial reference twins.

#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>

#include "parsefit/assignment.hpp"
#include "parsefit/kernels.hpp"

using namespace parsefit;

namespace {

double seconds(const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd random_unit_rows(int n, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = gauss(rng);
        m.row(i).normalize();
    }
    return m;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s serial %8.3f ms   openmp %8.3f ms   speedup %.2fx\n", name,
                1e3 * serial, 1e3 * parallel, serial / parallel);
}

}  // namespace

int main() {
    std::mt19937_64 rng(1);
    const int n = 6000;
    const int d = 6;
    const auto rows = random_unit_rows(n, d, rng);
    std::vector<int> active(static_cast<std::size_t>(n));
    std::iota(active.begin(), active.end(), 0);
    const double beta = 0.2;

    Eigen::MatrixXd out_serial, out_parallel;
    report("mean_shift_iterate (6000)",
           seconds([&] { kernels::serial::mean_shift_iterate(rows, rows, beta, active, out_serial); }),
           seconds([&] { kernels::mean_shift_iterate(rows, rows, beta, active, out_parallel); }));
    std::printf("  max row deviation %.2e\n",
                (out_serial - out_parallel).lpNorm<Eigen::Infinity>());

    report("rank_neighbor_distance",
           seconds([&] { (void)kernels::serial::rank_neighbor_distance(rows, 150); }),
           seconds([&] { (void)kernels::rank_neighbor_distance(rows, 150); }));

    report("vmf_density",
           seconds([&] { (void)kernels::serial::vmf_density(rows, rows, beta); }),
           seconds([&] { (void)kernels::vmf_density(rows, rows, beta); }));

    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Vec3> a(8000), b(8000);
    for (auto& p : a) p = Vec3(unit(rng), unit(rng), unit(rng));
    for (auto& p : b) p = Vec3(unit(rng), unit(rng), unit(rng));
    report("min_sq_dist (8000x8000)",
           seconds([&] { (void)kernels::serial::min_sq_dist(a, b); }),
           seconds([&] { (void)kernels::min_sq_dist(a, b); }));

    Eigen::MatrixXd costs(1000, 1000);
    std::uniform_real_distribution<double> cost(0.0, 1.0);
    for (int i = 0; i < costs.rows(); ++i) {
        for (int j = 0; j < costs.cols(); ++j) costs(i, j) = cost(rng);
    }
    const double t = seconds([&] { (void)assignment::solve_assignment(costs); });
    std::printf("%-28s %8.3f ms\n", "solve_assignment (1000^2)", 1e3 * t);
    return 0;
}
