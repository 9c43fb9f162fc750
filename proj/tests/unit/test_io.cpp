#include "planar/error.hpp"
#include "planar/io.hpp"
#include "planar/scan_sim.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace planar;

namespace {

std::vector<Vec3> random_cloud(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = Vec3(u(rng), u(rng), u(rng));
  return out;
}

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("point clouds round-trip in every format") {
    const auto pts = random_cloud(500);
    for (PlyFormat f : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian}) {
      for (bool dbl : {false, true}) {
        std::stringstream ss;
        write_cloud(ss, pts, f, dbl);
        const auto back = read_cloud(ss);
        REQUIRE(back.size() == pts.size());
        const double tol = dbl ? 1e-12 : 1e-5;
        for (std::size_t i = 0; i < pts.size(); ++i) CHECK((back[i] - pts[i]).norm() < tol * 20);
      }
    }
  }

  TEST_CASE("extra properties and elements are skipped") {
    std::istringstream in(
        "ply\nformat ascii 1.0\ncomment hi\nelement vertex 2\nproperty float nx\nproperty float x\n"
        "property float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
        "9 1 2 3\n9 4 5 6\n3 0 1 1\n");
    const auto pts = read_cloud(in);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1] == Vec3(4, 5, 6));
  }

  TEST_CASE("header errors carry a line number") {
    std::istringstream in("ply\nformat ascii 1.0\nelement vertex 1\nproperty quaternion x\nend_header\n");
    try {
      read_cloud(in);
      FAIL("expected Parse");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
      CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    std::istringstream trunc("ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\n"
                             "property float z\nend_header\n1 2 3\n");
    CHECK(code_of([&] { read_cloud(trunc); }) == ErrorCode::Parse);
    CHECK(code_of([] { read_cloud(fs::path("/nonexistent/cloud.ply")); }) == ErrorCode::Io);
  }

  TEST_CASE("poses: comments, renormalization and errors") {
    std::istringstream in("# t x y z qx qy qz qw\n0 0 0 0 0 0 0 1\n\n0.1 1 0 0 0 0 0 1.01  # drift\n");
    std::vector<std::string> warnings;
    const auto poses = read_poses(in, &warnings);
    REQUIRE(poses.size() == 2);
    CHECK(warnings.size() == 1);
    CHECK(poses[1].rotation.norm() == doctest::Approx(1.0));
    CHECK(poses[1].translation == Vec3(1, 0, 0));

    std::istringstream zero("0 0 0 0 0 0 0 0\n");
    CHECK(code_of([&] { read_poses(zero); }) == ErrorCode::NonUnitQuaternion);
    std::istringstream back("0 0 0 0 0 0 0 1\n0 0 0 0 0 0 0 1\n");
    CHECK(code_of([&] { read_poses(back); }) == ErrorCode::Parse);
    std::istringstream short_line("0 0 0 0 0 0 1\n");
    CHECK(code_of([&] { read_poses(short_line); }) == ErrorCode::Parse);
  }

  TEST_CASE("config parsing and validation") {
    std::istringstream in("# comment\nr_max = 0.5\nthreads = 3\ndeterministic = false\nseed_retention = all\n");
    const MapConfig c = parse_config(in);
    CHECK(c.r_max == 0.5);
    CHECK(c.threads == 3);
    CHECK_FALSE(c.deterministic);
    CHECK(c.seed_retention < 0);
    std::istringstream bad("r_maks = 1\n");
    try {
      parse_config(bad);
      FAIL("expected Parse");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
      CHECK(std::string(e.what()).find("r_maks") != std::string::npos);
    }
    CHECK(parse_retention("all") < 0);
    CHECK(parse_retention("4") == 4);
    CHECK(code_of([] { parse_retention("-2"); }) == ErrorCode::Parse);
    MapConfig z;
    z.r_max = 0.0;
    CHECK(code_of([&] { validate_config(z); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("mesh writer: exact layout of a single triangle, linear in size") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}};
    std::ostringstream plain;
    write_mesh(plain, m, false);
    const std::string s = plain.str();
    const std::size_t header = s.find("end_header\n") + 11;
    CHECK(s.size() - header == 3 * 12 + 13);
    std::istringstream in(s);
    const TriMesh back = read_mesh(in);
    CHECK(back.faces == m.faces);
    CHECK(back.vertices == m.vertices);

    m.face_group = {7};
    std::ostringstream colored;
    write_mesh(colored, m, true);
    CHECK(colored.str().size() == s.size() + 3 + std::string("property uchar red\nproperty uchar green\nproperty uchar blue\n").size());

    TriMesh big;
    for (int i = 0; i < 300; ++i) big.vertices.push_back(Vec3(i, 0, 0));
    for (std::uint32_t i = 0; i + 2 < 300; ++i) big.faces.push_back({i, i + 1, i + 2});
    std::ostringstream bs;
    write_mesh(bs, big, false);
    const std::string b = bs.str();
    CHECK(b.size() - (b.find("end_header\n") + 11) == 300 * 12 + 298 * 13);
  }

  TEST_CASE("map files round-trip and pass the audit") {
    const Scene scene = make_scene("dihedral");
    SensorModel sensor = preset_sensor("dihedral");
    sensor.azimuth_count = 128;
    MapState map;
    UpdateEngine eng(map);
    const auto poses = preset_trajectory("dihedral", 2);
    for (std::size_t i = 0; i < poses.size(); ++i) eng.process_scan(simulate_scan(scene, poses[i], sensor, i));
    std::stringstream ss;
    MapIo::save(map, ss);
    const auto back = MapIo::load(ss);
    CHECK_FALSE(back->audit());
    CHECK(back->mesh_count() == map.mesh_count());
    CHECK(back->face_count() == map.face_count());
    CHECK(back->vertex_count() == map.vertex_count());
    std::stringstream again;
    MapIo::save(*back, again);
    CHECK(again.str() == ss.str());
    std::istringstream junk("not a map");
    CHECK(code_of([&] { MapIo::load(junk); }) == ErrorCode::Parse);
  }
}
