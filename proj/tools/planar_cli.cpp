#include "planar/error.hpp"
#include "planar/pipeline.hpp"
#include "planar/scan_sim.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace planar;

namespace {

struct ReconstructArgs {
  fs::path scans, poses, config, out = "mesh.ply", timing, map_out, gt, report;
  int threads = 0;
  bool deterministic = false;
  bool raw = false;
  std::string retention;
  double tau = 0.1;
};

int reconstruct(const ReconstructArgs& a) {
  MapConfig cfg;
  if (!a.config.empty()) cfg = read_config(a.config, cfg);
  if (a.threads > 0) cfg.threads = a.threads;
  if (a.deterministic) {
    cfg.deterministic = true;
  } else if (cfg.threads > 1) {
    cfg.deterministic = false;
  }
  if (!a.retention.empty()) cfg.seed_retention = parse_retention(a.retention);
  validate_config(cfg);

  if (!fs::exists(a.poses)) throw Error(ErrorCode::Io, "pose file '" + a.poses.string() + "' not found");
  std::vector<std::string> warnings;
  const std::vector<Pose> poses = read_poses(a.poses, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  const std::vector<ScanFrame> scans = load_scans(a.scans, poses);

  PipelineResult r = run_pipeline(cfg, scans);
  const TriMesh mesh = a.raw ? to_trimesh(*r.map) : r.mesh;
  write_mesh(a.out, mesh);
  if (!a.timing.empty()) write_timing_csv(a.timing, r.timings);
  if (!a.map_out.empty()) MapIo::save(*r.map, a.map_out);
  std::cout << "scans " << scans.size() << ", points " << r.points_in << ", planar-meshes " << r.map->mesh_count()
            << ", faces " << mesh.faces.size() << ", vertices " << mesh.vertices.size() << "\n";

  if (!a.gt.empty()) {
    const std::vector<Vec3> gt = read_cloud(a.gt);
    EvalReport rep = evaluate_mesh(mesh, gt, a.tau, r.points_in);
    rep.file_size_bytes = fs::file_size(a.out);
    write_report_kv(std::cout, rep);
    if (!a.report.empty()) {
      std::ofstream out(a.report);
      write_report_kv(out, rep);
    }
  }
  return 0;
}

struct SimulateArgs {
  std::string scene = "room";
  int frames = 100;
  fs::path out = "scans";
  std::uint64_t seed = 1;
  double noise = -1.0;
  fs::path gt;
  double gt_density = 1000.0;
  int azimuth = 0;
};

int simulate(const SimulateArgs& a) {
  const Scene scene = make_scene(a.scene);
  SensorModel sensor = preset_sensor(a.scene);
  sensor.seed = a.seed;
  if (a.noise >= 0.0) sensor.sigma_noise = a.noise;
  if (a.azimuth > 0) sensor.azimuth_count = a.azimuth;
  const std::vector<Pose> poses = preset_trajectory(a.scene, a.frames);
  std::vector<ScanFrame> scans;
  scans.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) scans.push_back(simulate_scan(scene, poses[i], sensor, i));
  save_scans(a.out, scans);
  if (!a.gt.empty()) write_cloud(a.gt, ground_truth_cloud(scene, a.gt_density, a.seed));
  std::cout << "wrote " << scans.size() << " scans of '" << a.scene << "' to " << a.out << "\n";
  return 0;
}

int evaluate(const fs::path& mesh_path, const fs::path& gt_path, double tau, std::size_t samples,
             const fs::path& report, bool csv) {
  const TriMesh mesh = read_mesh(mesh_path);
  const std::vector<Vec3> gt = read_cloud(gt_path);
  EvalReport r = evaluate_mesh(mesh, gt, tau, samples == 0 ? gt.size() : samples);
  r.file_size_bytes = fs::file_size(mesh_path);
  if (csv) {
    write_report_csv(std::cout, r);
  } else {
    write_report_kv(std::cout, r);
  }
  if (!report.empty()) {
    std::ofstream out(report);
    write_report_kv(out, r);
  }
  return 0;
}

int audit(const fs::path& map_path) {
  const auto map = MapIo::load(map_path);
  if (auto err = map->audit()) {
    std::cerr << "audit failed: " << *err << "\n";
    return 2;
  }
  std::cout << "audit ok: " << map->mesh_count() << " planar-meshes, " << map->face_count() << " faces, "
            << map->vertex_count() << " vertices\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental planar-mesh surface reconstruction"};
  app.require_subcommand(1);

  ReconstructArgs ra;
  auto* rec = app.add_subcommand("reconstruct", "Integrate posed scans and write the simplified mesh");
  rec->add_option("--scans", ra.scans, "Directory of scan .ply files (sensor frame)")->required();
  rec->add_option("--poses", ra.poses, "Pose file: t tx ty tz qx qy qz qw per line")->required();
  rec->add_option("--config", ra.config, "key = value configuration file");
  rec->add_option("--out", ra.out, "Output mesh (binary PLY)");
  rec->add_option("--timing", ra.timing, "Per-scan timing CSV");
  rec->add_option("--threads", ra.threads, "Worker threads");
  rec->add_flag("--deterministic", ra.deterministic, "Sequential, input-order integration");
  rec->add_option("--seed-retention", ra.retention, "0, K scans or all");
  rec->add_option("--map", ra.map_out, "Also save the full map for 'audit'");
  rec->add_flag("--raw", ra.raw, "Write the unsimplified mesh");
  rec->add_option("--gt", ra.gt, "Ground-truth cloud; prints an evaluation report");
  rec->add_option("--tau", ra.tau, "Evaluation threshold (m)");
  rec->add_option("--report", ra.report, "Write the evaluation report here");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Write synthetic scans of a preset scene");
  sim->add_option("--scene", sa.scene, "room, gap, doorway-closed, dihedral, recessed-panel, single-plane, cluttered");
  sim->add_option("--frames", sa.frames, "Number of scans");
  sim->add_option("--out", sa.out, "Output directory");
  sim->add_option("--seed", sa.seed, "Noise seed");
  sim->add_option("--noise", sa.noise, "Range noise sigma (m); preset default if omitted");
  sim->add_option("--azimuth", sa.azimuth, "Rays per beam; preset default if omitted");
  sim->add_option("--gt", sa.gt, "Also write a ground-truth cloud here");
  sim->add_option("--gt-density", sa.gt_density, "Ground-truth points per m^2");

  fs::path mesh_path, gt_path, report;
  double tau = 0.1;
  std::size_t samples = 0;
  bool csv = false;
  auto* ev = app.add_subcommand("evaluate", "Compare a mesh against a ground-truth cloud");
  ev->add_option("--mesh", mesh_path, "Mesh file")->required();
  ev->add_option("--gt", gt_path, "Ground-truth point cloud")->required();
  ev->add_option("--tau", tau, "Distance threshold (m)");
  ev->add_option("--samples", samples, "Points sampled on the mesh (default: ground-truth size)");
  ev->add_option("--report", report, "Write the key=value report here");
  ev->add_flag("--csv", csv, "Print a CSV row instead of key=value");

  fs::path map_path;
  auto* au = app.add_subcommand("audit", "Run the full invariant audit on a saved map");
  au->add_option("--map", map_path, "Map file written by reconstruct --map")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*rec) return reconstruct(ra);
    if (*sim) return simulate(sa);
    if (*ev) return evaluate(mesh_path, gt_path, tau, samples, report, csv);
    if (*au) return audit(map_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
