#include "planar/pipeline.hpp"

#include "planar/error.hpp"

#include <algorithm>
#include <cstdio>

namespace planar {

PipelineResult run_pipeline(const MapConfig& config, std::span<const ScanFrame> scans,
                            std::function<void(const MapState&, std::size_t)> after_scan) {
  validate_config(config);
  PipelineResult r;
  r.map = std::make_unique<MapState>(config);
  UpdateEngine engine(*r.map);
  if (after_scan) engine.set_after_scan(std::move(after_scan));
  r.timings.reserve(scans.size());
  for (const ScanFrame& s : scans) {
    r.points_in += s.points.size();
    r.timings.push_back(engine.process_scan(s));
  }
  r.simplified = simplify_map(*r.map);
  r.mesh = to_trimesh(r.simplified);
  return r;
}

std::vector<ScanFrame> load_scans(const fs::path& dir, const std::vector<Pose>& poses) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "scan directory '" + dir.string() + "' not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ply") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() != poses.size()) {
    throw Error(ErrorCode::InvalidArgument, std::to_string(files.size()) + " scan files but " +
                                                std::to_string(poses.size()) + " poses");
  }
  std::vector<ScanFrame> out(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    out[i].pose = poses[i];
    out[i].points = read_cloud(files[i]);
    for (Vec3& p : out[i].points) p = poses[i].apply(p);
  }
  return out;
}

void save_scans(const fs::path& dir, std::span<const ScanFrame> scans) {
  fs::create_directories(dir);
  std::vector<Pose> poses;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const Pose& pose = scans[i].pose;
    const Eigen::Quaterniond inv = pose.rotation.conjugate();
    std::vector<Vec3> local;
    local.reserve(scans[i].points.size());
    for (const Vec3& p : scans[i].points) local.push_back(inv * (p - pose.translation));
    char name[32];
    std::snprintf(name, sizeof name, "scan_%05zu.ply", i);
    write_cloud(dir / name, local, PlyFormat::BinaryLittleEndian, true);
    poses.push_back(pose);
  }
  write_poses(dir / "poses.txt", poses);
}

}  // namespace planar
