#pragma once

#include "planar/eval.hpp"
#include "planar/planar_mesh.hpp"
#include "planar/scan.hpp"
#include "planar/simplify.hpp"
#include "planar/update_engine.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace planar {

namespace fs = std::filesystem;

enum class PlyFormat { Ascii, BinaryLittleEndian };

/// Positions of the vertex element; other properties and elements are ignored.
/// Throws Parse (with the header line number) or Io.
std::vector<Vec3> read_cloud(const fs::path& path);
std::vector<Vec3> read_cloud(std::istream& in);
void write_cloud(const fs::path& path, const std::vector<Vec3>& points, PlyFormat format = PlyFormat::BinaryLittleEndian,
                 bool double_precision = false);
void write_cloud(std::ostream& out, const std::vector<Vec3>& points, PlyFormat format, bool double_precision);

/// Binary little-endian PLY: float xyz, uchar-counted int index lists and,
/// when `colors` is set and face groups are present, an RGB colour per face
/// derived from the owning planar-mesh id.
void write_mesh(const fs::path& path, const TriMesh& mesh, bool colors = true);
void write_mesh(std::ostream& out, const TriMesh& mesh, bool colors = true);
TriMesh read_mesh(const fs::path& path);
TriMesh read_mesh(std::istream& in);
std::array<std::uint8_t, 3> group_color(std::uint32_t id);

/// One pose per line: timestamp tx ty tz qx qy qz qw. Blank lines and '#'
/// comments are skipped. Timestamps must increase strictly. Quaternions off
/// unit length by more than 1e-3 are renormalized and reported in `warnings`.
std::vector<Pose> read_poses(const fs::path& path, std::vector<std::string>* warnings = nullptr);
std::vector<Pose> read_poses(std::istream& in, std::vector<std::string>* warnings = nullptr);
void write_poses(const fs::path& path, const std::vector<Pose>& poses);

/// `key = value` lines with '#' comments, applied on top of `base`.
MapConfig read_config(const fs::path& path, MapConfig base = {});
MapConfig parse_config(std::istream& in, MapConfig base = {});
/// Accepts "all" or a non-negative scan count.
int parse_retention(const std::string& s);
void validate_config(const MapConfig& c);

void write_timing_csv(std::ostream& out, const std::vector<TimingRecord>& records);
void write_timing_csv(const fs::path& path, const std::vector<TimingRecord>& records);

/// Versioned binary container holding the complete map state.
class MapIo {
 public:
  static void save(const MapState& map, std::ostream& out);
  static void save(const MapState& map, const fs::path& path);
  static std::unique_ptr<MapState> load(std::istream& in);
  static std::unique_ptr<MapState> load(const fs::path& path);
};

}  // namespace planar
