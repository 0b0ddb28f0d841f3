#pragma once

#include <cstdint>
#include <vector>

#include "parsefit/primitives.hpp"
#include "parsefit/types.hpp"

namespace parsefit::ransac {

struct RansacConfig {
    double inlier_epsilon = 0.01;
    double normal_epsilon = 0.3;  // radians
    int min_inliers = 50;
    int max_candidates_per_round = 1000;
    int restarts = 3;
    std::uint64_t seed = 0;
    int neighborhood = 100;  // localized sampling pool around the first draw
};

struct Detection {
    primitives::PrimitivePatch patch;
    std::vector<int> inlier_indices;
};

/// Sequential RANSAC over {plane, sphere, cylinder, cone}: per round, the
/// minimal-set candidate with the most distance+normal inliers is accepted,
/// refit by least squares on its inliers, and its inliers removed; rounds
/// repeat until no candidate reaches min_inliers. The run with the highest
/// coverage across `restarts` runs wins. Deterministic given the seed.
std::vector<Detection> detect_primitives(const PointCloud& cloud, const RansacConfig& config = {});

}  // namespace parsefit::ransac
