#include "planar/eval.hpp"

#include "planar/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace planar {

namespace {

constexpr std::uint32_t kLeafSize = 8;

double box_dist_sq(const Aabb& b, const Vec3& q) {
  const Vec3 d = (b.min - q).cwiseMax(q - b.max).cwiseMax(Vec3::Zero());
  return d.squaredNorm();
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : pts_(points.begin(), points.end()) {
  if (!pts_.empty()) {
    nodes_.reserve(2 * pts_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(pts_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end, -1, -1, -1, 0.0, Aabb{}});
  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.expand(pts_[i]);
  nodes_[id].box = box;
  if (end - begin <= kLeafSize) return id;

  int axis;
  box.extent().maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(pts_.begin() + begin, pts_.begin() + mid, pts_.begin() + end,
                   [axis](const Vec3& a, const Vec3& b) { return a[axis] < b[axis]; });
  const std::int32_t l = build(begin, mid);
  const std::int32_t r = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = pts_[mid][axis];
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

double KdTree::nearest_sq(const Vec3& q) const {
  double best = std::numeric_limits<double>::infinity();
  if (nodes_.empty()) return best;
  std::int32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (box_dist_sq(n.box, q) >= best) continue;
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) best = std::min(best, (pts_[i] - q).squaredNorm());
      continue;
    }
    // Visit the near side first: push it last.
    const bool left_first = q[n.axis] < n.split;
    stack[top++] = left_first ? n.right : n.left;
    stack[top++] = left_first ? n.left : n.right;
  }
  return best;
}

bool KdTree::any_within(const Vec3& q, double radius) const { return nearest_sq(q) <= radius * radius; }

double TriMesh::area() const {
  double a = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) a += triangle(f).area();
  return a;
}

std::vector<Vec3> sample_mesh(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  std::vector<double> cdf;
  cdf.reserve(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.triangle(f).area();
    cdf.push_back(total);
  }
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyMesh, "cannot sample a mesh without area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = uni(rng) * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
    const std::size_t f = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    const Triangle t = mesh.triangle(f);
    const double r1 = std::sqrt(uni(rng)), r2 = uni(rng);
    out.push_back((1.0 - r1) * t.a + r1 * (1.0 - r2) * t.b + r1 * r2 * t.c);
  }
  return out;
}

std::vector<double> nearest_distances(std::span<const Vec3> a, std::span<const Vec3> b) {
  const KdTree tree(b);
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::sqrt(tree.nearest_sq(a[i]));
  return d;
}

DistanceStats distance_stats(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "distance_stats needs two non-empty clouds");
  const std::vector<double> d = nearest_distances(a, b);
  DistanceStats s;
  for (double x : d) s.mean += x;
  s.mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double x : d) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(d.size()));
  return s;
}

PrecisionRecall precision_recall_f(std::span<const Vec3> recon, std::span<const Vec3> gt, double tau) {
  if (recon.empty() || gt.empty()) throw Error(ErrorCode::InvalidArgument, "precision_recall_f needs two non-empty clouds");
  auto fraction_within = [tau](std::span<const Vec3> from, std::span<const Vec3> to) {
    const KdTree tree(to);
    std::size_t k = 0;
    for (const Vec3& p : from) k += tree.any_within(p, tau) ? 1 : 0;
    return static_cast<double>(k) / static_cast<double>(from.size());
  };
  PrecisionRecall r;
  r.precision = fraction_within(recon, gt);
  r.recall = fraction_within(gt, recon);
  r.f_score = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

EvalReport evaluate_mesh(const TriMesh& mesh, std::span<const Vec3> gt, double tau, std::size_t samples,
                         std::uint64_t seed) {
  EvalReport r;
  r.threshold = tau;
  r.face_count = mesh.faces.size();
  r.vertex_count = mesh.vertices.size();
  r.n_gt_pts = gt.size();
  const std::vector<Vec3> recon = sample_mesh(mesh, samples, seed);
  r.n_recon_pts = recon.size();
  const DistanceStats d = distance_stats(recon, gt);
  r.mean_dist = d.mean;
  r.std_dist = d.stddev;
  const PrecisionRecall pr = precision_recall_f(recon, gt, tau);
  r.precision = pr.precision;
  r.recall = pr.recall;
  r.f_score = pr.f_score;
  return r;
}

void write_report_kv(std::ostream& os, const EvalReport& r) {
  os << "mean_dist=" << r.mean_dist << "\n"
     << "std_dist=" << r.std_dist << "\n"
     << "precision=" << r.precision << "\n"
     << "recall=" << r.recall << "\n"
     << "f_score=" << r.f_score << "\n"
     << "threshold=" << r.threshold << "\n"
     << "n_recon_pts=" << r.n_recon_pts << "\n"
     << "n_gt_pts=" << r.n_gt_pts << "\n"
     << "file_size_bytes=" << r.file_size_bytes << "\n"
     << "face_count=" << r.face_count << "\n"
     << "vertex_count=" << r.vertex_count << "\n";
}

void write_report_csv(std::ostream& os, const EvalReport& r, bool header) {
  if (header) {
    os << "mean_dist,std_dist,precision,recall,f_score,threshold,n_recon_pts,n_gt_pts,file_size_bytes,face_count,"
          "vertex_count\n";
  }
  os << r.mean_dist << ',' << r.std_dist << ',' << r.precision << ',' << r.recall << ',' << r.f_score << ','
     << r.threshold << ',' << r.n_recon_pts << ',' << r.n_gt_pts << ',' << r.file_size_bytes << ',' << r.face_count
     << ',' << r.vertex_count << "\n";
}

}  // namespace planar
