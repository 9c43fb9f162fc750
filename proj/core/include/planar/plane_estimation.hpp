#pragma once

#include "planar/geometry.hpp"

#include <cstddef>
#include <optional>

namespace planar {

/// Sufficient statistics of the samples absorbed by a plane: count, centroid
/// and population scatter. The raw samples themselves are never kept.
struct PlaneStats {
  std::size_t n = 0;
  Vec3 centroid = Vec3::Zero();
  Mat3 scatter = Mat3::Zero();
};

struct Plane {
  Vec3 p = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

struct SensorNoiseModel {
  double sigma_noise = 0.01;          // m, along the range axis
  Mat3 origin_cov = Mat3::Zero();     // sensor origin
  Mat3 direction_cov = Mat3::Zero();  // unit ray direction
  Mat3 point_cov = Mat3::Zero();      // per-point term of the scatter update
};

/// Covariance of the plane position (sample mean) and of the unit normal.
struct ParamUncertainty {
  Mat3 position = Mat3::Zero();
  Mat3 normal = Mat3::Zero();
};

struct RangeJacobians {
  Vec3 p, o, n, l;
};

struct RangeModel {
  double mu = 0.0;
  double sigma = 0.0;
  double var_p = 0.0;
  double var_o = 0.0;
  double var_n = 0.0;
  double var_l = 0.0;
  double var_noise = 0.0;
};

enum class Position { Front, Within, Behind };

struct PositionClass {
  Position position = Position::Within;
  double z = 0.0;
};

inline constexpr double kZCrit = 1.96;
// |n . l| at or below this is treated as a grazing ray (about 89 degrees).
inline constexpr double kCosGrazing = 0.0175;
// Relative eigen-gap below which the smallest eigenvector is ill defined.
inline constexpr double kEigGap = 1e-8;

PlaneStats update_stats(const PlaneStats& stats, const Vec3& lp, const Mat3& point_cov = Mat3::Zero());

/// Unit eigenvector of the smallest eigenvalue of `scatter`, flipped so that it
/// faces `toward` as seen from `centroid`. Throws DegeneratePlane.
Vec3 fit_normal(const Mat3& scatter, const Vec3& centroid, const Vec3& toward);
std::optional<Vec3> try_fit_normal(const Mat3& scatter, const Vec3& centroid, const Vec3& toward);

/// Normal and parameter uncertainty from one eigendecomposition. nullopt when
/// fewer than 3 samples or the scatter is degenerate.
struct PlaneFit {
  Vec3 normal;
  ParamUncertainty uncertainty;
};
std::optional<PlaneFit> try_fit_plane(const PlaneStats& stats, const Vec3& toward);

/// Throws DegeneratePlane when n < 3 or the scatter is degenerate.
ParamUncertainty param_uncertainty(const PlaneStats& stats);

/// (p - o).n / (n.l). Throws GrazingRay when |n.l| <= cos_grazing.
double expected_range(const Plane& plane, const Ray& ray, double cos_grazing = kCosGrazing);
std::optional<double> try_expected_range(const Plane& plane, const Ray& ray,
                                         double cos_grazing = kCosGrazing);

/// Partial derivatives of the expected range with respect to p, o, n and l,
/// each taken with the other three held fixed.
RangeJacobians range_jacobians(const Plane& plane, const Ray& ray, double cos_grazing = kCosGrazing);

RangeModel range_sigma(const Plane& plane, const ParamUncertainty& unc, const Ray& ray,
                       const SensorNoiseModel& noise, double cos_grazing = kCosGrazing);
/// Uses zero parameter uncertainty when the stats cannot support a fit.
RangeModel range_sigma(const Plane& plane, const PlaneStats& stats, const Ray& ray,
                       const SensorNoiseModel& noise, double cos_grazing = kCosGrazing);

PositionClass classify(double d, const RangeModel& model, double z_crit = kZCrit);

}  // namespace planar
