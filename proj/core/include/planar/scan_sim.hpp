#pragma once

#include "planar/geometry.hpp"
#include "planar/scan.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace planar {

struct Scene {
  std::string name;
  std::vector<Triangle> triangles;
  std::vector<int> surface;  // surface id per triangle

  void add_quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int id);
  double area() const;
};

/// Known presets: room, gap, doorway-closed, dihedral, recessed-panel,
/// single-plane, cluttered. Throws InvalidArgument otherwise.
Scene make_scene(const std::string& preset);
std::vector<std::string> scene_presets();

struct SensorModel {
  int azimuth_count = 1024;
  int elevation_count = 64;
  double elevation_min_deg = -22.5;
  double elevation_max_deg = 22.5;
  double max_range = 50.0;
  double sigma_noise = 0.01;
  std::uint64_t seed = 1;
};

/// Ray cast against every triangle; nearest hit wins.
std::optional<double> cast_ray(const Scene& scene, const Vec3& origin, const Vec3& dir, double tmax,
                               int* surface = nullptr);

/// Scan `frame_index` feeds the noise stream, so frames differ under one seed.
ScanFrame simulate_scan(const Scene& scene, const Pose& pose, const SensorModel& sensor,
                        std::uint64_t frame_index = 0);

/// Uniform-by-area sampling at `density` points per m^2 (Poisson count per triangle).
std::vector<Vec3> ground_truth_cloud(const Scene& scene, double density, std::uint64_t seed = 7);

/// A closed ellipse at height z around `center`, sensor yaw following the tangent.
std::vector<Pose> loop_trajectory(const Vec3& center, double rx, double ry, int frames, double period_s = 0.1);
/// Evenly spaced poses on the segment a-b, identity orientation.
std::vector<Pose> line_trajectory(const Vec3& a, const Vec3& b, int frames, double period_s = 0.1);

/// A sensor and trajectory suited to each preset, as used by the CLI and tests.
SensorModel preset_sensor(const std::string& preset);
std::vector<Pose> preset_trajectory(const std::string& preset, int frames);

}  // namespace planar
