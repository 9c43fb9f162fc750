#include "planar/bvh.hpp"
#include "planar/io.hpp"
#include "planar/scan_sim.hpp"
#include "planar/update_engine.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

using namespace planar;

namespace {

DynamicBvh random_tree(int n, std::vector<Aabb>* boxes) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 50);
  DynamicBvh t(0.05);
  for (int i = 0; i < n; ++i) {
    const Vec3 c(u(rng), u(rng), u(rng) * 0.1);
    const Aabb b{c.array() - 0.1, c.array() + 0.1};
    t.insert({LeafKind::Face, 0, static_cast<std::uint32_t>(i)}, b);
    if (boxes) boxes->push_back(b);
  }
  return t;
}

void BM_BvhRayQuery(benchmark::State& state) {
  std::vector<Aabb> boxes;
  const DynamicBvh t = random_tree(static_cast<int>(state.range(0)), &boxes);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 50);
  std::size_t visited = 0;
  for (auto _ : state) {
    const Vec3 o(u(rng), u(rng), 5.0);
    const Vec3 d = (Vec3(u(rng), u(rng), 0.0) - o).normalized();
    QueryStats st;
    auto hits = t.query_ray(
        o, d, 60.0,
        [&](const LeafPayload& p) -> std::optional<double> {
          if (ray_aabb_intersect(o, d.cwiseInverse(), 60.0, boxes[p.element])) return 1.0;
          return std::nullopt;
        },
        &st);
    visited += st.nodes_visited;
    benchmark::DoNotOptimize(hits);
  }
  state.counters["visits"] = benchmark::Counter(static_cast<double>(visited), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_BvhRayQuery)->RangeMultiplier(8)->Range(1 << 10, 1 << 16);

void BM_BvhUpdate(benchmark::State& state) {
  DynamicBvh t = random_tree(static_cast<int>(state.range(0)), nullptr);
  std::vector<NodeId> leaves;
  t.for_each_leaf([&](NodeId id, const LeafPayload&) { leaves.push_back(id); });
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 50);
  for (auto _ : state) {
    const NodeId leaf = leaves[rng() % leaves.size()];
    const Vec3 c(u(rng), u(rng), 0.0);
    t.update(leaf, Aabb{c.array() - 0.1, c.array() + 0.1});
  }
}
BENCHMARK(BM_BvhUpdate)->Arg(1 << 14);

// Integration of one 64x256 scan of the room into a map built from the previous scans.
void BM_IntegrateScan(benchmark::State& state) {
  const Scene scene = make_scene("room");
  SensorModel sensor = preset_sensor("room");
  sensor.azimuth_count = 256;
  const auto poses = preset_trajectory("room", 6);
  std::vector<ScanFrame> scans;
  for (std::size_t i = 0; i < poses.size(); ++i) scans.push_back(simulate_scan(scene, poses[i], sensor, i));
  std::size_t points = 0;
  for (auto _ : state) {
    state.PauseTiming();
    MapState map;
    UpdateEngine eng(map);
    for (std::size_t i = 0; i + 1 < scans.size(); ++i) eng.process_scan(scans[i]);
    state.ResumeTiming();
    eng.process_scan(scans.back());
    points += scans.back().points.size();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(points));
}
BENCHMARK(BM_IntegrateScan)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_PlyRead(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<Vec3> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  std::ostringstream os;
  write_cloud(os, pts, state.range(1) ? PlyFormat::BinaryLittleEndian : PlyFormat::Ascii, false);
  const std::string data = os.str();
  for (auto _ : state) {
    std::istringstream in(data);
    benchmark::DoNotOptimize(read_cloud(in));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * data.size()));
}
BENCHMARK(BM_PlyRead)->Args({65536, 0})->Args({65536, 1})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
