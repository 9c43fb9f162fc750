#include "planar/scan_sim.hpp"

#include "planar/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace planar {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Axis-aligned box without a bottom face.
void add_box(Scene& s, const Vec3& lo, const Vec3& hi, int id) {
  const double x0 = lo.x(), y0 = lo.y(), z0 = lo.z(), x1 = hi.x(), y1 = hi.y(), z1 = hi.z();
  s.add_quad({x0, y0, z1}, {x1, y0, z1}, {x1, y1, z1}, {x0, y1, z1}, id);
  s.add_quad({x0, y0, z0}, {x1, y0, z0}, {x1, y0, z1}, {x0, y0, z1}, id + 1);
  s.add_quad({x0, y1, z0}, {x1, y1, z0}, {x1, y1, z1}, {x0, y1, z1}, id + 2);
  s.add_quad({x0, y0, z0}, {x0, y1, z0}, {x0, y1, z1}, {x0, y0, z1}, id + 3);
  s.add_quad({x1, y0, z0}, {x1, y1, z0}, {x1, y1, z1}, {x1, y0, z1}, id + 4);
}

// Interior of [lo, hi]: floor, ceiling and four walls.
void add_room(Scene& s, const Vec3& lo, const Vec3& hi) {
  const double x0 = lo.x(), y0 = lo.y(), z0 = lo.z(), x1 = hi.x(), y1 = hi.y(), z1 = hi.z();
  s.add_quad({x0, y0, z0}, {x1, y0, z0}, {x1, y1, z0}, {x0, y1, z0}, 0);
  s.add_quad({x0, y0, z1}, {x1, y0, z1}, {x1, y1, z1}, {x0, y1, z1}, 1);
  s.add_quad({x0, y0, z0}, {x1, y0, z0}, {x1, y0, z1}, {x0, y0, z1}, 2);
  s.add_quad({x0, y1, z0}, {x1, y1, z0}, {x1, y1, z1}, {x0, y1, z1}, 3);
  s.add_quad({x0, y0, z0}, {x0, y1, z0}, {x0, y1, z1}, {x0, y0, z1}, 4);
  s.add_quad({x1, y0, z0}, {x1, y1, z0}, {x1, y1, z1}, {x1, y0, z1}, 5);
}

Pose pose_at(const Vec3& t, double yaw, double stamp) {
  Pose p;
  p.timestamp = stamp;
  p.translation = t;
  p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  return p;
}

}  // namespace

void Scene::add_quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int id) {
  triangles.push_back({a, b, c});
  triangles.push_back({a, c, d});
  surface.push_back(id);
  surface.push_back(id);
}

double Scene::area() const {
  double s = 0.0;
  for (const Triangle& t : triangles) s += t.area();
  return s;
}

std::vector<std::string> scene_presets() {
  return {"room", "gap", "doorway-closed", "dihedral", "recessed-panel", "single-plane", "cluttered"};
}

Scene make_scene(const std::string& preset) {
  Scene s;
  s.name = preset;
  if (preset == "room") {
    add_room(s, {-5, -4, 0}, {5, 4, 3});
  } else if (preset == "gap" || preset == "doorway-closed") {
    // Front wall at y=0 with a 1 m opening at |x| < 0.5; back wall 4 m behind it.
    // Floor and ceiling on both sides give every ray through the opening a return.
    s.add_quad({-5, 0, 0}, {-0.5, 0, 0}, {-0.5, 0, 3}, {-5, 0, 3}, 0);
    s.add_quad({0.5, 0, 0}, {5, 0, 0}, {5, 0, 3}, {0.5, 0, 3}, 0);
    s.add_quad({-5, -4, 0}, {5, -4, 0}, {5, -4, 3}, {-5, -4, 3}, 1);
    s.add_quad({-5, -4, 0}, {5, -4, 0}, {5, 4, 0}, {-5, 4, 0}, 3);
    s.add_quad({-5, -4, 3}, {5, -4, 3}, {5, 4, 3}, {-5, 4, 3}, 4);
    if (preset == "doorway-closed") s.add_quad({-0.5, 0, 0}, {0.5, 0, 0}, {0.5, 0, 3}, {-0.5, 0, 3}, 2);
  } else if (preset == "dihedral") {
    s.add_quad({0, -3, 0}, {6, -3, 0}, {6, 3, 0}, {0, 3, 0}, 0);
    s.add_quad({0, -3, 0}, {0, 3, 0}, {0, 3, 4}, {0, -3, 4}, 1);
  } else if (preset == "recessed-panel") {
    // Wall at y=0 around a 2x1 m panel set 0.02 m back (away from the sensor side y>0).
    s.add_quad({-4, 0, 0}, {4, 0, 0}, {4, 0, 1}, {-4, 0, 1}, 0);
    s.add_quad({-4, 0, 2}, {4, 0, 2}, {4, 0, 3}, {-4, 0, 3}, 0);
    s.add_quad({-4, 0, 1}, {-1, 0, 1}, {-1, 0, 2}, {-4, 0, 2}, 0);
    s.add_quad({1, 0, 1}, {4, 0, 1}, {4, 0, 2}, {1, 0, 2}, 0);
    s.add_quad({-1, -0.02, 1}, {1, -0.02, 1}, {1, -0.02, 2}, {-1, -0.02, 2}, 1);
  } else if (preset == "single-plane") {
    s.add_quad({-5, -5, 0}, {5, -5, 0}, {5, 5, 0}, {-5, 5, 0}, 0);
  } else if (preset == "cluttered") {
    add_room(s, {-5, -4, 0}, {5, 4, 3});
    add_box(s, {-0.5, -0.5, 0}, {0.5, 0.5, 1.0}, 10);
    add_box(s, {-4.6, 2.8, 0}, {-3.6, 3.6, 1.5}, 20);
    add_box(s, {3.8, -3.6, 0}, {4.2, -3.2, 2.2}, 30);
    add_box(s, {3.6, 2.0, 0.7}, {4.6, 3.4, 0.75}, 40);
    add_box(s, {-1.6, -3.7, 0}, {-0.4, -3.2, 0.5}, 50);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown scene preset '" + preset + "'");
  }
  return s;
}

std::optional<double> cast_ray(const Scene& scene, const Vec3& origin, const Vec3& dir, double tmax,
                               int* surface) {
  std::optional<double> best;
  for (std::size_t i = 0; i < scene.triangles.size(); ++i) {
    const auto t = ray_triangle_intersect(origin, dir, best ? *best : tmax, scene.triangles[i]);
    if (t && (!best || *t < *best)) {
      best = t;
      if (surface) *surface = scene.surface[i];
    }
  }
  return best;
}

ScanFrame simulate_scan(const Scene& scene, const Pose& pose, const SensorModel& sensor,
                        std::uint64_t frame_index) {
  ScanFrame frame;
  frame.pose = pose;
  frame.points.reserve(static_cast<std::size_t>(sensor.azimuth_count) * sensor.elevation_count);
  std::mt19937_64 rng(splitmix64(sensor.seed ^ splitmix64(frame_index)));
  std::normal_distribution<double> noise(0.0, sensor.sigma_noise);

  const double el0 = sensor.elevation_min_deg * std::numbers::pi / 180.0;
  const double el1 = sensor.elevation_max_deg * std::numbers::pi / 180.0;
  for (int e = 0; e < sensor.elevation_count; ++e) {
    const double el = sensor.elevation_count == 1 ? 0.5 * (el0 + el1)
                                                  : el0 + (el1 - el0) * e / (sensor.elevation_count - 1);
    for (int a = 0; a < sensor.azimuth_count; ++a) {
      const double az = 2.0 * std::numbers::pi * a / sensor.azimuth_count;
      const Vec3 local(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const Vec3 dir = (pose.rotation * local).normalized();
      // Draw even for misses so a ray's noise does not depend on the others.
      const double n = sensor.sigma_noise > 0.0 ? noise(rng) : 0.0;
      const auto t = cast_ray(scene, pose.translation, dir, sensor.max_range);
      if (!t) continue;
      const double range = *t + n;
      if (range <= 0.0 || range > sensor.max_range) continue;
      frame.points.push_back(pose.translation + range * dir);
    }
  }
  return frame;
}

std::vector<Vec3> ground_truth_cloud(const Scene& scene, double density, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> out;
  for (const Triangle& t : scene.triangles) {
    std::poisson_distribution<long> count(density * t.area());
    const long n = count(rng);
    for (long i = 0; i < n; ++i) {
      const double r1 = std::sqrt(uni(rng)), r2 = uni(rng);
      out.push_back((1.0 - r1) * t.a + r1 * (1.0 - r2) * t.b + r1 * r2 * t.c);
    }
  }
  return out;
}

std::vector<Pose> loop_trajectory(const Vec3& center, double rx, double ry, int frames, double period_s) {
  std::vector<Pose> out;
  for (int i = 0; i < frames; ++i) {
    const double th = 2.0 * std::numbers::pi * i / frames;
    const Vec3 t = center + Vec3(rx * std::cos(th), ry * std::sin(th), 0.0);
    const double yaw = std::atan2(ry * std::cos(th), -rx * std::sin(th));
    out.push_back(pose_at(t, yaw, i * period_s));
  }
  return out;
}

std::vector<Pose> line_trajectory(const Vec3& a, const Vec3& b, int frames, double period_s) {
  std::vector<Pose> out;
  for (int i = 0; i < frames; ++i) {
    const double s = frames == 1 ? 0.0 : static_cast<double>(i) / (frames - 1);
    out.push_back(pose_at(a + s * (b - a), 0.0, i * period_s));
  }
  return out;
}

SensorModel preset_sensor(const std::string& preset) {
  SensorModel s;
  if (preset == "room" || preset == "cluttered") {
    // A 3 m room seen from mid-height needs a steeper fan than +-22.5 deg to
    // cover floor and ceiling near the trajectory.
    s.elevation_min_deg = -60.0;
    s.elevation_max_deg = 60.0;
    s.azimuth_count = 512;
  } else {
    s.elevation_min_deg = -45.0;
    s.elevation_max_deg = 45.0;
    s.azimuth_count = 512;
  }
  return s;
}

std::vector<Pose> preset_trajectory(const std::string& preset, int frames) {
  if (preset == "room" || preset == "cluttered") return loop_trajectory({0, 0, 1.5}, 3.0, 2.0, frames);
  if (preset == "doorway-closed") return line_trajectory({-1.5, 2.5, 1.5}, {1.5, 2.5, 1.5}, frames);
  // A level pass crosses the wall plane only at the beam-row heights of the
  // closed pass; changing height and standoff sweeps the rows across the opening.
  if (preset == "gap") return line_trajectory({-1.5, 2.0, 1.2}, {1.5, 3.0, 1.8}, frames);
  if (preset == "dihedral") return line_trajectory({3, -1.5, 1.5}, {3, 1.5, 1.5}, frames);
  // Oblique views stretch the 0.02 m recess in range by 1/cos, which the z-test needs.
  if (preset == "recessed-panel") return line_trajectory({-4.0, 1.5, 1.5}, {4.0, 1.5, 1.5}, frames);
  if (preset == "single-plane") return line_trajectory({-3, -3, 1.5}, {3, 3, 1.5}, frames);
  throw Error(ErrorCode::InvalidArgument, "unknown scene preset '" + preset + "'");
}

}  // namespace planar
