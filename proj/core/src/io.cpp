#include "planar/io.hpp"

#include "planar/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace planar {

namespace {

// ---------------------------------------------------------------- little-endian primitives

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error(ErrorCode::Parse, "unexpected end of data");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// ---------------------------------------------------------------- PLY

enum class Scalar { I8, U8, I16, U16, I32, U32, F32, F64 };

Scalar parse_scalar(const std::string& t, int line) {
  if (t == "char" || t == "int8") return Scalar::I8;
  if (t == "uchar" || t == "uint8") return Scalar::U8;
  if (t == "short" || t == "int16") return Scalar::I16;
  if (t == "ushort" || t == "uint16") return Scalar::U16;
  if (t == "int" || t == "int32") return Scalar::I32;
  if (t == "uint" || t == "uint32") return Scalar::U32;
  if (t == "float" || t == "float32") return Scalar::F32;
  if (t == "double" || t == "float64") return Scalar::F64;
  throw Error(ErrorCode::Parse, "line " + std::to_string(line) + ": unknown property type '" + t + "'");
}

double read_binary(std::istream& in, Scalar s) {
  switch (s) {
    case Scalar::I8: return get<std::int8_t>(in);
    case Scalar::U8: return get<std::uint8_t>(in);
    case Scalar::I16: return get<std::int16_t>(in);
    case Scalar::U16: return get<std::uint16_t>(in);
    case Scalar::I32: return get<std::int32_t>(in);
    case Scalar::U32: return get<std::uint32_t>(in);
    case Scalar::F32: return get<float>(in);
    case Scalar::F64: return get<double>(in);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  Scalar type = Scalar::F32;
  bool is_list = false;
  Scalar count_type = Scalar::U8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

struct PlyHeader {
  PlyFormat format = PlyFormat::Ascii;
  std::vector<PlyElement> elements;
};

PlyHeader read_header(std::istream& in) {
  PlyHeader h;
  std::string line;
  int n = 0;
  bool have_format = false;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": " + msg);
  };
  for (;;) {
    if (!std::getline(in, line)) {
      ++n;
      fail("header ended before end_header");
    }
    ++n;
    line = trim(line);
    if (n == 1) {
      if (line != "ply") fail("missing 'ply' magic");
      continue;
    }
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string f, v;
      ss >> f >> v;
      if (f == "ascii") {
        h.format = PlyFormat::Ascii;
      } else if (f == "binary_little_endian") {
        h.format = PlyFormat::BinaryLittleEndian;
      } else {
        fail("unsupported format '" + f + "'");
      }
      have_format = true;
    } else if (kw == "element") {
      PlyElement e;
      long long count = -1;
      ss >> e.name >> count;
      if (e.name.empty() || count < 0) fail("malformed element line");
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(e);
    } else if (kw == "property") {
      if (h.elements.empty()) fail("property before any element");
      PlyProperty p;
      std::string t;
      ss >> t;
      if (t == "list") {
        std::string ct, it;
        ss >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = parse_scalar(ct, n);
        p.type = parse_scalar(it, n);
      } else {
        p.type = parse_scalar(t, n);
        ss >> p.name;
      }
      if (p.name.empty()) fail("property without a name");
      h.elements.back().props.push_back(p);
    } else if (kw == "end_header") {
      break;
    } else {
      fail("unexpected keyword '" + kw + "'");
    }
  }
  if (!have_format) fail("missing format line");
  return h;
}

// Reads every element; vertex xyz and face index lists are kept.
void read_body(std::istream& in, const PlyHeader& h, std::vector<Vec3>& verts,
               std::vector<std::array<std::uint32_t, 3>>* faces) {
  for (const PlyElement& e : h.elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    int ix = -1, iy = -1, iz = -1, ilist = -1;
    for (std::size_t k = 0; k < e.props.size(); ++k) {
      const std::string& nm = e.props[k].name;
      if (nm == "x") ix = static_cast<int>(k);
      if (nm == "y") iy = static_cast<int>(k);
      if (nm == "z") iz = static_cast<int>(k);
      if (e.props[k].is_list && (nm == "vertex_indices" || nm == "vertex_index")) ilist = static_cast<int>(k);
    }
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) throw Error(ErrorCode::Parse, "vertex element lacks x, y or z");
    if (is_vertex) verts.reserve(e.count);

    std::string line;
    for (std::size_t i = 0; i < e.count; ++i) {
      std::istringstream ss;
      if (h.format == PlyFormat::Ascii) {
        do {
          if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "unexpected end of data in '" + e.name + "'");
        } while (trim(line).empty());
        ss.str(line);
      }
      auto value = [&](Scalar s) -> double {
        if (h.format == PlyFormat::BinaryLittleEndian) return read_binary(in, s);
        double v;
        if (!(ss >> v)) throw Error(ErrorCode::Parse, "malformed value in '" + e.name + "' row " + std::to_string(i));
        return v;
      };
      Vec3 p = Vec3::Zero();
      std::vector<std::uint32_t> idx;
      for (std::size_t k = 0; k < e.props.size(); ++k) {
        const PlyProperty& pr = e.props[k];
        if (pr.is_list) {
          const auto cnt = static_cast<std::size_t>(value(pr.count_type));
          for (std::size_t j = 0; j < cnt; ++j) {
            const double x = value(pr.type);
            if (static_cast<int>(k) == ilist) idx.push_back(static_cast<std::uint32_t>(x));
          }
        } else {
          const double x = value(pr.type);
          if (static_cast<int>(k) == ix) p.x() = x;
          if (static_cast<int>(k) == iy) p.y() = x;
          if (static_cast<int>(k) == iz) p.z() = x;
        }
      }
      if (is_vertex) verts.push_back(p);
      if (is_face && faces) {
        // Fan-triangulate polygons.
        for (std::size_t j = 2; j < idx.size(); ++j) faces->push_back({idx[0], idx[j - 1], idx[j]});
      }
    }
  }
}

}  // namespace

std::vector<Vec3> read_cloud(std::istream& in) {
  const PlyHeader h = read_header(in);
  bool has_vertex = false;
  for (const auto& e : h.elements) has_vertex = has_vertex || e.name == "vertex";
  if (!has_vertex) throw Error(ErrorCode::Parse, "no vertex element");
  std::vector<Vec3> pts;
  read_body(in, h, pts, nullptr);
  return pts;
}

std::vector<Vec3> read_cloud(const fs::path& path) {
  auto in = open_in(path);
  return read_cloud(in);
}

void write_cloud(std::ostream& out, const std::vector<Vec3>& points, PlyFormat format, bool double_precision) {
  const char* type = double_precision ? "double" : "float";
  out << "ply\nformat " << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << points.size() << "\n"
      << "property " << type << " x\nproperty " << type << " y\nproperty " << type << " z\nend_header\n";
  if (format == PlyFormat::Ascii) {
    out << std::setprecision(double_precision ? 17 : 9);
    for (const Vec3& p : points) {
      if (double_precision) {
        out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
      } else {
        out << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' ' << static_cast<float>(p.z())
            << '\n';
      }
    }
    return;
  }
  for (const Vec3& p : points) {
    for (int k = 0; k < 3; ++k) {
      if (double_precision) {
        put<double>(out, p[k]);
      } else {
        put<float>(out, static_cast<float>(p[k]));
      }
    }
  }
}

void write_cloud(const fs::path& path, const std::vector<Vec3>& points, PlyFormat format, bool double_precision) {
  auto out = open_out(path);
  write_cloud(out, points, format, double_precision);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::array<std::uint8_t, 3> group_color(std::uint32_t id) {
  std::uint64_t x = id + 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  x ^= x >> 31;
  // Keep colours away from black so every planar-mesh stays visible.
  return {static_cast<std::uint8_t>(64 + (x & 0xBF)), static_cast<std::uint8_t>(64 + ((x >> 8) & 0xBF)),
          static_cast<std::uint8_t>(64 + ((x >> 16) & 0xBF))};
}

void write_mesh(std::ostream& out, const TriMesh& mesh, bool colors) {
  const bool rgb = colors && mesh.face_group.size() == mesh.faces.size();
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "element face " << mesh.faces.size() << "\n"
      << "property list uchar int vertex_indices\n";
  if (rgb) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  for (const Vec3& v : mesh.vertices) {
    put<float>(out, static_cast<float>(v.x()));
    put<float>(out, static_cast<float>(v.y()));
    put<float>(out, static_cast<float>(v.z()));
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    put<std::uint8_t>(out, 3);
    for (std::uint32_t i : mesh.faces[f]) put<std::int32_t>(out, static_cast<std::int32_t>(i));
    if (rgb) {
      for (std::uint8_t c : group_color(mesh.face_group[f])) put<std::uint8_t>(out, c);
    }
  }
}

void write_mesh(const fs::path& path, const TriMesh& mesh, bool colors) {
  auto out = open_out(path);
  write_mesh(out, mesh, colors);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

TriMesh read_mesh(std::istream& in) {
  const PlyHeader h = read_header(in);
  TriMesh m;
  read_body(in, h, m.vertices, &m.faces);
  for (const auto& f : m.faces) {
    for (std::uint32_t i : f) {
      if (i >= m.vertices.size()) throw Error(ErrorCode::Parse, "face index out of range");
    }
  }
  return m;
}

TriMesh read_mesh(const fs::path& path) {
  auto in = open_in(path);
  return read_mesh(in);
}

// ---------------------------------------------------------------- poses

std::vector<Pose> read_poses(std::istream& in, std::vector<std::string>* warnings) {
  std::vector<Pose> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": expected 8 numbers");
    }
    std::string extra;
    if (ss >> extra) throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": trailing data");
    if (!out.empty() && !(t > out.back().timestamp)) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": timestamps must increase strictly");
    }
    Eigen::Quaterniond q(qw, qx, qy, qz);
    const double norm = q.norm();
    if (!(norm > 1e-6) || !std::isfinite(norm)) {
      throw Error(ErrorCode::NonUnitQuaternion, "line " + std::to_string(n) + ": quaternion has zero length");
    }
    if (std::abs(norm - 1.0) > 1e-3) {
      if (warnings) {
        std::ostringstream w;
        w << "line " << n << ": quaternion norm " << norm << " renormalized";
        warnings->push_back(w.str());
      }
    }
    q.normalize();
    Pose p;
    p.timestamp = t;
    p.translation = {tx, ty, tz};
    p.rotation = q;
    out.push_back(p);
  }
  return out;
}

std::vector<Pose> read_poses(const fs::path& path, std::vector<std::string>* warnings) {
  auto in = open_in(path);
  return read_poses(in, warnings);
}

void write_poses(const fs::path& path, const std::vector<Pose>& poses) {
  auto out = open_out(path);
  out << std::setprecision(17);
  for (const Pose& p : poses) {
    const auto& q = p.rotation;
    out << p.timestamp << ' ' << p.translation.x() << ' ' << p.translation.y() << ' ' << p.translation.z() << ' '
        << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

// ---------------------------------------------------------------- config

int parse_retention(const std::string& s) {
  if (s == "all" || s == "All" || s == "ALL") return -1;
  std::size_t used = 0;
  int v = -1;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || v < 0) throw Error(ErrorCode::Parse, "seed retention must be 'all' or a scan count, got '" + s + "'");
  return v;
}

void validate_config(const MapConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
  };
  positive(c.noise.sigma_noise, "sigma_noise");
  positive(c.z_crit, "z_crit");
  positive(c.r_max, "r_max");
  positive(c.a_min, "a_min");
  positive(c.bvh_margin, "fat_margin");
  positive(c.endpoint_slack, "endpoint_slack");
  positive(c.reproject_angle_deg, "reproject_angle_deg");
  positive(c.reproject_offset, "reproject_offset");
  positive(c.grid_cell, "grid_cell");
  positive(c.dup_eps, "dup_eps");
  if (c.threads < 1) throw Error(ErrorCode::InvalidArgument, "threads must be at least 1");
}

MapConfig parse_config(std::istream& in, MapConfig c) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto num = [&]() {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(val, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != val.size() || val.empty()) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": '" + key + "' needs a number");
      }
      return v;
    };
    auto boolean = [&]() {
      if (val == "true" || val == "1" || val == "yes" || val == "on") return true;
      if (val == "false" || val == "0" || val == "no" || val == "off") return false;
      throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": '" + key + "' needs true or false");
    };
    if (key == "sigma_noise") c.noise.sigma_noise = num();
    else if (key == "z_crit") c.z_crit = num();
    else if (key == "r_max") c.r_max = num();
    else if (key == "a_min") c.a_min = num();
    else if (key == "fat_margin" || key == "bvh_margin") c.bvh_margin = num();
    else if (key == "endpoint_slack") c.endpoint_slack = num();
    else if (key == "cos_grazing") c.cos_grazing = num();
    else if (key == "reproject_angle_deg") c.reproject_angle_deg = num();
    else if (key == "reproject_offset") c.reproject_offset = num();
    else if (key == "grid_cell") c.grid_cell = num();
    else if (key == "dup_eps") c.dup_eps = num();
    else if (key == "seed_retention") {
      try {
        c.seed_retention = parse_retention(val);
      } catch (const Error&) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": bad seed_retention '" + val + "'");
      }
    } else if (key == "threads") c.threads = static_cast<int>(num());
    else if (key == "deterministic") c.deterministic = boolean();
    else if (key == "emit_faceless_seeds") c.emit_faceless_seeds = boolean();
    else throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": unknown key '" + key + "'");
  }
  validate_config(c);
  return c;
}

MapConfig read_config(const fs::path& path, MapConfig base) {
  auto in = open_in(path);
  return parse_config(in, base);
}

// ---------------------------------------------------------------- timing

void write_timing_csv(std::ostream& out, const std::vector<TimingRecord>& records) {
  out << "scan,points,search,position_check,mesh_update,tree_maintenance,total,updated,grown,seeded,skipped,"
         "researched,purged_seeds\n";
  out << std::setprecision(9);
  for (const TimingRecord& r : records) {
    out << r.scan << ',' << r.points << ',' << r.search << ',' << r.position_check << ',' << r.mesh_update << ','
        << r.tree_maintenance << ',' << r.total << ',' << r.updated << ',' << r.grown << ',' << r.seeded << ','
        << r.skipped << ',' << r.researched << ',' << r.purged_seeds << '\n';
  }
}

void write_timing_csv(const fs::path& path, const std::vector<TimingRecord>& records) {
  auto out = open_out(path);
  write_timing_csv(out, records);
}

// ---------------------------------------------------------------- map container

namespace {

constexpr char kMagic[8] = {'P', 'L', 'N', 'R', 'M', 'A', 'P', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_vec(std::ostream& o, const Vec3& v) {
  for (int k = 0; k < 3; ++k) put<double>(o, v[k]);
}
void put_vec(std::ostream& o, const Vec2& v) {
  put<double>(o, v.x());
  put<double>(o, v.y());
}
void put_mat(std::ostream& o, const Mat3& m) {
  for (int i = 0; i < 9; ++i) put<double>(o, m.data()[i]);
}
Vec3 get_vec3(std::istream& in) {
  Vec3 v;
  for (int k = 0; k < 3; ++k) v[k] = get<double>(in);
  return v;
}
Vec2 get_vec2(std::istream& in) {
  const double x = get<double>(in);
  return {x, get<double>(in)};
}
Mat3 get_mat(std::istream& in) {
  Mat3 m;
  for (int i = 0; i < 9; ++i) m.data()[i] = get<double>(in);
  return m;
}

}  // namespace

void MapIo::save(const MapState& map, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  const MapConfig& c = map.config_;
  put<double>(out, c.noise.sigma_noise);
  put_mat(out, c.noise.origin_cov);
  put_mat(out, c.noise.direction_cov);
  put_mat(out, c.noise.point_cov);
  for (double v : {c.z_crit, c.r_max, c.a_min, c.bvh_margin, c.endpoint_slack, c.cos_grazing, c.reproject_angle_deg,
                   c.reproject_offset, c.grid_cell, c.dup_eps}) {
    put<double>(out, v);
  }
  put<std::int32_t>(out, c.seed_retention);
  put<std::uint64_t>(out, map.current_scan_);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(map.meshes_.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(map.live_meshes_));
  for (const auto& ptr : map.meshes_) {
    if (!ptr) continue;
    const PlanarMesh& p = *ptr;
    put<std::uint32_t>(out, p.id);
    put<std::uint64_t>(out, p.created_at_scan);
    put<std::uint64_t>(out, p.stats.n);
    put_vec(out, p.stats.centroid);
    put_mat(out, p.stats.scatter);
    put<std::uint8_t>(out, p.has_fit);
    put_vec(out, p.plane.p);
    put_vec(out, p.plane.normal);
    put_mat(out, p.uncertainty.position);
    put_mat(out, p.uncertainty.normal);
    put<std::uint8_t>(out, p.framed);
    put_vec(out, p.frame.origin);
    put_vec(out, p.frame.normal);
    put_vec(out, p.frame.u);
    put_vec(out, p.frame.v);

    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.vertices.size()));
    p.vertices.for_each([&](ElemId id, const Vertex& v) {
      put<std::uint32_t>(out, id);
      put_vec(out, v.pos3);
      put_vec(out, v.pos2);
      put<double>(out, v.radius);
    });
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.edges.size()));
    p.edges.for_each([&](ElemId id, const Edge& e) {
      put<std::uint32_t>(out, id);
      put<std::uint32_t>(out, e.v[0]);
      put<std::uint32_t>(out, e.v[1]);
    });
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.faces.size()));
    p.faces.for_each([&](ElemId id, const Face& f) {
      put<std::uint32_t>(out, id);
      for (int k = 0; k < 3; ++k) put<std::uint32_t>(out, f.v[k]);
      for (int k = 0; k < 3; ++k) put<std::uint32_t>(out, f.e[k]);
    });
  }
}

void MapIo::save(const MapState& map, const fs::path& path) {
  auto out = open_out(path);
  save(map, out);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::unique_ptr<MapState> MapIo::load(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::Parse, "not a map file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw Error(ErrorCode::Parse, "unsupported map version " + std::to_string(version));
  MapConfig c;
  c.noise.sigma_noise = get<double>(in);
  c.noise.origin_cov = get_mat(in);
  c.noise.direction_cov = get_mat(in);
  c.noise.point_cov = get_mat(in);
  for (double* v : {&c.z_crit, &c.r_max, &c.a_min, &c.bvh_margin, &c.endpoint_slack, &c.cos_grazing,
                    &c.reproject_angle_deg, &c.reproject_offset, &c.grid_cell, &c.dup_eps}) {
    *v = get<double>(in);
  }
  c.seed_retention = get<std::int32_t>(in);
  auto map = std::make_unique<MapState>(c);
  map->current_scan_ = get<std::uint64_t>(in);
  const auto slots = get<std::uint32_t>(in);
  const auto live = get<std::uint32_t>(in);
  if (live > slots) throw Error(ErrorCode::Parse, "mesh count exceeds slot count");
  map->meshes_.resize(slots);

  for (std::uint32_t k = 0; k < live; ++k) {
    const auto id = get<std::uint32_t>(in);
    if (id >= slots || map->meshes_[id]) throw Error(ErrorCode::Parse, "bad planar-mesh id");
    auto p = std::make_unique<PlanarMesh>(c.grid_cell);
    p->id = id;
    p->created_at_scan = get<std::uint64_t>(in);
    p->stats.n = get<std::uint64_t>(in);
    p->stats.centroid = get_vec3(in);
    p->stats.scatter = get_mat(in);
    p->has_fit = get<std::uint8_t>(in) != 0;
    p->plane.p = get_vec3(in);
    p->plane.normal = get_vec3(in);
    p->uncertainty.position = get_mat(in);
    p->uncertainty.normal = get_mat(in);
    p->framed = get<std::uint8_t>(in) != 0;
    p->frame.origin = get_vec3(in);
    p->frame.normal = get_vec3(in);
    p->frame.u = get_vec3(in);
    p->frame.v = get_vec3(in);

    const auto nv = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < nv; ++i) {
      const auto vid = get<std::uint32_t>(in);
      Vertex v;
      v.pos3 = get_vec3(in);
      v.pos2 = get_vec2(in);
      v.radius = get<double>(in);
      p->vertices.emplace_at(vid, std::move(v));
    }
    const auto ne = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < ne; ++i) {
      const auto eid = get<std::uint32_t>(in);
      Edge e;
      e.v[0] = get<std::uint32_t>(in);
      e.v[1] = get<std::uint32_t>(in);
      for (ElemId x : e.v) {
        if (!p->vertices.contains(x)) throw Error(ErrorCode::Parse, "edge references a missing vertex");
      }
      p->edges.emplace_at(eid, e);
      p->vertices[e.v[0]].edges.push_back(eid);
      p->vertices[e.v[1]].edges.push_back(eid);
    }
    const auto nf = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < nf; ++i) {
      const auto fid = get<std::uint32_t>(in);
      Face f;
      for (int j = 0; j < 3; ++j) f.v[j] = get<std::uint32_t>(in);
      for (int j = 0; j < 3; ++j) f.e[j] = get<std::uint32_t>(in);
      for (int j = 0; j < 3; ++j) {
        if (!p->vertices.contains(f.v[j]) || !p->edges.contains(f.e[j])) {
          throw Error(ErrorCode::Parse, "face references a missing element");
        }
        Edge& ed = p->edges[f.e[j]];
        if (ed.faces[0] == kNoElem) {
          ed.faces[0] = fid;
        } else if (ed.faces[1] == kNoElem) {
          ed.faces[1] = fid;
        } else {
          throw Error(ErrorCode::Parse, "edge with more than two faces");
        }
      }
      f.area = 0.5 * orient_2d(p->vertices[f.v[0]].pos2, p->vertices[f.v[1]].pos2, p->vertices[f.v[2]].pos2);
      p->total_area += f.area;
      p->faces.emplace_at(fid, f);
    }
    p->vertices.rebuild_free_list();
    p->edges.rebuild_free_list();
    p->faces.rebuild_free_list();

    PlanarMesh& ref = *p;
    map->meshes_[id] = std::move(p);
    ++map->live_meshes_;
    if (ref.framed) map->rebuild_grid(ref);
    ref.faces.for_each([&](ElemId f, Face& fc) {
      fc.fis_leaf = map->fis_.insert({LeafKind::Face, id, f}, ref.triangle(f).bounds());
    });
    ref.vertices.for_each([&](ElemId v, Vertex& vx) {
      ref.bounds.expand(vx.pos3);
      if (ref.is_boundary(v)) vx.rrs_leaf = map->rrs_.insert({LeafKind::BoundaryVertex, id, v}, map->sphere_box(vx));
    });
    if (!ref.bounds.is_empty()) ref.mesh_leaf = map->mesh_tree_.insert({LeafKind::Mesh, id, 0}, ref.bounds);
  }
  return map;
}

std::unique_ptr<MapState> MapIo::load(const fs::path& path) {
  auto in = open_in(path);
  return load(in);
}

}  // namespace planar
