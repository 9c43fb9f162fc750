#pragma once

#include "planar/geometry.hpp"

#include <vector>

namespace planar {

struct Pose {
  double timestamp = 0.0;
  Vec3 translation = Vec3::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

/// A posed batch of world-frame points. `origins` is either empty (every ray
/// starts at the pose translation) or holds one origin per point.
struct ScanFrame {
  Pose pose;
  std::vector<Vec3> points;
  std::vector<Vec3> origins;

  const Vec3& origin(std::size_t i) const { return origins.empty() ? pose.translation : origins[i]; }
};

}  // namespace planar
