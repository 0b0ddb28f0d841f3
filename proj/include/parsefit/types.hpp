#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace parsefit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Raw input: N positions plus optional per-point unit normals.
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;  // empty, or same length as positions

    std::size_t size() const { return positions.size(); }
    bool has_normals() const { return !normals.empty(); }
};

/// Thrown when a numeric routine cannot produce a meaningful result
/// (rank-deficient systems, degenerate configurations, too few samples).
class FitError : public std::runtime_error {
  public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace parsefit
