#pragma once

#include "planar/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace planar {

/// Static 3D kd-tree over a point set for exact nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// Squared distance to the nearest point (infinity for an empty tree).
  double nearest_sq(const Vec3& q) const;
  bool any_within(const Vec3& q, double radius) const;
  std::size_t size() const { return pts_.size(); }

 private:
  struct Node {
    std::uint32_t begin, end;
    std::int32_t left = -1, right = -1;
    int axis = -1;
    double split = 0.0;
    Aabb box;
  };
  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> pts_;
  std::vector<Node> nodes_;
};

/// Indexed triangle mesh as written to disk.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::vector<std::uint32_t> face_group;  // owning planar-mesh id per face, optional

  Triangle triangle(std::size_t f) const {
    return {vertices[faces[f][0]], vertices[faces[f][1]], vertices[faces[f][2]]};
  }
  double area() const;
};

/// n points, faces chosen proportionally to area, uniform inside each face.
/// Throws EmptyMesh when there is no face with positive area.
std::vector<Vec3> sample_mesh(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

struct DistanceStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

/// Nearest-neighbour distance from every point of a to the set b.
std::vector<double> nearest_distances(std::span<const Vec3> a, std::span<const Vec3> b);
DistanceStats distance_stats(std::span<const Vec3> a, std::span<const Vec3> b);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};
PrecisionRecall precision_recall_f(std::span<const Vec3> recon, std::span<const Vec3> gt, double tau = 0.1);

struct EvalReport {
  double mean_dist = 0.0;
  double std_dist = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double threshold = 0.1;
  std::size_t n_recon_pts = 0;
  std::size_t n_gt_pts = 0;
  std::uint64_t file_size_bytes = 0;
  std::size_t face_count = 0;
  std::size_t vertex_count = 0;
};

/// Samples `samples` points on the mesh (seeded) and compares with gt.
EvalReport evaluate_mesh(const TriMesh& mesh, std::span<const Vec3> gt, double tau, std::size_t samples,
                         std::uint64_t seed = 11);

void write_report_kv(std::ostream& os, const EvalReport& r);
void write_report_csv(std::ostream& os, const EvalReport& r, bool header = true);

}  // namespace planar
