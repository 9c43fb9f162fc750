#pragma once

#include "planar/io.hpp"

#include <functional>
#include <memory>
#include <span>

namespace planar {

struct PipelineResult {
  std::unique_ptr<MapState> map;
  std::vector<TimingRecord> timings;
  std::vector<SimplifiedMesh> simplified;
  TriMesh mesh;  // simplified output as written
  std::size_t points_in = 0;
};

/// process_scan for every frame, then one simplification pass.
PipelineResult run_pipeline(const MapConfig& config, std::span<const ScanFrame> scans,
                            std::function<void(const MapState&, std::size_t)> after_scan = {});

/// Scan files hold points in the sensor frame; they are moved into the world
/// frame with the pose of the same index. Files are taken in name order.
std::vector<ScanFrame> load_scans(const fs::path& dir, const std::vector<Pose>& poses);
/// Inverse of load_scans: scan_NNNNN.ply files (double precision) plus poses.txt.
void save_scans(const fs::path& dir, std::span<const ScanFrame> scans);

}  // namespace planar
