#include "planar/plane_estimation.hpp"

#include "planar/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace planar {

PlaneStats update_stats(const PlaneStats& s, const Vec3& lp, const Mat3& point_cov) {
  PlaneStats out;
  const double n = static_cast<double>(s.n);
  out.n = s.n + 1;
  if (s.n == 0) {
    out.centroid = lp;
    out.scatter = point_cov;
    return out;
  }
  const Vec3 mu = (lp + n * s.centroid) / (1.0 + n);
  const Vec3 dp = s.centroid - mu;
  const Vec3 dl = lp - mu;
  out.centroid = mu;
  out.scatter = (n * s.scatter + point_cov + n * dp * dp.transpose() + dl * dl.transpose()) / (1.0 + n);
  return out;
}

namespace {

struct Eig {
  Vec3 values;  // ascending
  Mat3 vectors;
};

std::optional<Eig> solve(const Mat3& scatter) {
  const Mat3 sym = 0.5 * (scatter + scatter.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
  if (es.info() != Eigen::Success) return std::nullopt;
  Eig e{es.eigenvalues(), es.eigenvectors()};
  const double trace = std::max(0.0, sym.trace());
  if (!(e.values[1] - e.values[0] > kEigGap * trace)) return std::nullopt;
  return e;
}

Vec3 oriented(const Vec3& n, const Vec3& centroid, const Vec3& toward) {
  return n.dot(toward - centroid) < 0.0 ? Vec3(-n) : n;
}

ParamUncertainty uncertainty_from(const Eig& e, const PlaneStats& s) {
  ParamUncertainty u;
  const double n = static_cast<double>(s.n);
  u.position = s.scatter / n;
  const double l0 = std::max(0.0, e.values[0]);
  for (int i = 1; i < 3; ++i) {
    const double gap = e.values[i] - l0;
    const Vec3 v = e.vectors.col(i);
    u.normal += (l0 * e.values[i] / (n * gap * gap)) * v * v.transpose();
  }
  return u;
}

}  // namespace

std::optional<Vec3> try_fit_normal(const Mat3& scatter, const Vec3& centroid, const Vec3& toward) {
  auto e = solve(scatter);
  if (!e) return std::nullopt;
  return oriented(e->vectors.col(0).normalized(), centroid, toward);
}

Vec3 fit_normal(const Mat3& scatter, const Vec3& centroid, const Vec3& toward) {
  if (auto n = try_fit_normal(scatter, centroid, toward)) return *n;
  throw Error(ErrorCode::DegeneratePlane, "smallest eigenvalue is not separated");
}

std::optional<PlaneFit> try_fit_plane(const PlaneStats& stats, const Vec3& toward) {
  if (stats.n < 3) return std::nullopt;
  auto e = solve(stats.scatter);
  if (!e) return std::nullopt;
  return PlaneFit{oriented(e->vectors.col(0).normalized(), stats.centroid, toward), uncertainty_from(*e, stats)};
}

ParamUncertainty param_uncertainty(const PlaneStats& stats) {
  if (stats.n < 3) throw Error(ErrorCode::DegeneratePlane, "fewer than 3 samples");
  auto e = solve(stats.scatter);
  if (!e) throw Error(ErrorCode::DegeneratePlane, "smallest eigenvalue is not separated");
  return uncertainty_from(*e, stats);
}

std::optional<double> try_expected_range(const Plane& plane, const Ray& ray, double cos_grazing) {
  const double nl = plane.normal.dot(ray.dir);
  if (!(std::abs(nl) > cos_grazing)) return std::nullopt;
  return (plane.p - ray.origin).dot(plane.normal) / nl;
}

double expected_range(const Plane& plane, const Ray& ray, double cos_grazing) {
  if (auto mu = try_expected_range(plane, ray, cos_grazing)) return *mu;
  throw Error(ErrorCode::GrazingRay, "ray is nearly parallel to the plane");
}

RangeJacobians range_jacobians(const Plane& plane, const Ray& ray, double cos_grazing) {
  const double mu = expected_range(plane, ray, cos_grazing);
  const double nl = plane.normal.dot(ray.dir);
  RangeJacobians j;
  j.p = plane.normal / nl;
  j.o = -plane.normal / nl;
  j.n = (plane.p - ray.origin) / nl - mu * ray.dir / nl;
  j.l = -mu * plane.normal / nl;
  return j;
}

RangeModel range_sigma(const Plane& plane, const ParamUncertainty& unc, const Ray& ray,
                       const SensorNoiseModel& noise, double cos_grazing) {
  const RangeJacobians j = range_jacobians(plane, ray, cos_grazing);
  RangeModel m;
  m.mu = expected_range(plane, ray, cos_grazing);
  m.var_p = j.p.dot(unc.position * j.p);
  m.var_o = j.o.dot(noise.origin_cov * j.o);
  m.var_n = j.n.dot(unc.normal * j.n);
  m.var_l = j.l.dot(noise.direction_cov * j.l);
  m.var_noise = noise.sigma_noise * noise.sigma_noise;
  m.sigma = std::sqrt(m.var_p + m.var_o + m.var_n + m.var_l + m.var_noise);
  return m;
}

RangeModel range_sigma(const Plane& plane, const PlaneStats& stats, const Ray& ray,
                       const SensorNoiseModel& noise, double cos_grazing) {
  ParamUncertainty unc;
  if (stats.n >= 3) {
    if (auto e = solve(stats.scatter)) unc = uncertainty_from(*e, stats);
  }
  return range_sigma(plane, unc, ray, noise, cos_grazing);
}

PositionClass classify(double d, const RangeModel& model, double z_crit) {
  PositionClass c;
  c.z = (d - model.mu) / model.sigma;
  if (c.z < -z_crit) {
    c.position = Position::Front;
  } else if (c.z > z_crit) {
    c.position = Position::Behind;
  } else {
    c.position = Position::Within;
  }
  return c;
}

}  // namespace planar
