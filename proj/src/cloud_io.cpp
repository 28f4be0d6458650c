#include "sparsereg/cloud_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "sparsereg/error.hpp"

namespace sparsereg {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  return in;
}

std::string format_point(const Vec3& p, char sep) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.6f%c%.6f%c%.6f\n", p.x(), sep, p.y(), sep, p.z());
  return buf;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
};

}  // namespace

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\n";
  if (cloud.id) out << "comment identity " << *cloud.id << "\n";
  if (cloud.frame_index) out << "comment frame " << *cloud.frame_index << "\n";
  out << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : cloud.points) out << format_point(p, ' ');
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

PointCloud read_ply(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  strip_cr(line);
  if (line != "ply") fail(ErrorCode::CorruptDataset, path.string() + ": missing ply magic");

  PointCloud cloud;
  std::vector<PlyElement> elements;
  bool ascii = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = fmt == "ascii";
    } else if (word == "element") {
      PlyElement e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) fail(ErrorCode::CorruptDataset, path.string() + ": orphan property");
      std::string type, name;
      ss >> type;
      if (type == "list") {
        std::string a, b;
        ss >> a >> b;
      }
      ss >> name;
      elements.back().properties.push_back(type == "list" ? "<list>" : name);
    } else if (word == "comment") {
      std::string key;
      ss >> key;
      if (key == "identity") {
        std::string id;
        ss >> id;
        cloud.id = id;
      } else if (key == "frame") {
        int f = 0;
        if (ss >> f) cloud.frame_index = f;
      }
    }
  }
  if (!ascii) fail(ErrorCode::CorruptDataset, path.string() + ": only ascii PLY is supported");

  for (const auto& e : elements) {
    if (e.name != "vertex") {
      for (std::size_t i = 0; i < e.count; ++i) std::getline(in, line);
      continue;
    }
    const auto find = [&](const char* name) -> std::ptrdiff_t {
      const auto it = std::find(e.properties.begin(), e.properties.end(), name);
      return it == e.properties.end() ? -1 : it - e.properties.begin();
    };
    const std::ptrdiff_t ix = find("x"), iy = find("y"), iz = find("z");
    if (ix < 0 || iy < 0 || iz < 0) {
      fail(ErrorCode::CorruptDataset, path.string() + ": vertex lacks x, y or z");
    }
    cloud.points.reserve(e.count);
    std::vector<double> values(e.properties.size());
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!std::getline(in, line)) fail(ErrorCode::CorruptDataset, path.string() + ": truncated");
      std::istringstream ss(line);
      for (auto& v : values) {
        if (!(ss >> v)) fail(ErrorCode::CorruptDataset, path.string() + ": bad vertex line");
      }
      cloud.points.emplace_back(values[ix], values[iy], values[iz]);
    }
  }
  return cloud;
}

void write_xyz_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_out(path);
  for (const auto& p : cloud.points) out << format_point(p, ',');
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

PointCloud read_xyz_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  PointCloud cloud;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z)) fail(ErrorCode::CorruptDataset, path.string() + ": bad line");
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

PointCloud read_cloud(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply") return read_ply(path);
  if (ext == ".csv" || ext == ".xyz") return read_xyz_csv(path);
  fail(ErrorCode::Io, "unknown cloud format: " + path.string());
}

void write_depth_map(const std::filesystem::path& stem, const DepthMap& map) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < map.depth.size(); ++i) {
    if (!map.mask[i]) continue;
    lo = any ? std::min(lo, map.depth[i]) : map.depth[i];
    hi = any ? std::max(hi, map.depth[i]) : map.depth[i];
    any = true;
  }
  const double span = hi > lo ? hi - lo : 1.0;

  auto pgm_path = stem;
  pgm_path += ".pgm";
  auto out = open_out(pgm_path);
  out << "P2\n" << map.resolution << " " << map.resolution << "\n65535\n";
  for (int row = 0; row < map.resolution; ++row) {
    for (int col = 0; col < map.resolution; ++col) {
      const std::size_t i = map.index(row, col);
      long v = 0;
      if (map.mask[i]) v = 1 + std::lround((map.depth[i] - lo) / span * 65534.0);
      out << v << (col + 1 == map.resolution ? '\n' : ' ');
    }
  }
  if (!out) fail(ErrorCode::Io, "write failed for " + pgm_path.string());

  auto json_path = stem;
  json_path += ".json";
  auto meta = open_out(json_path);
  const nlohmann::json j = {{"scale", map.scale},
                            {"origin", {map.origin.x(), map.origin.y()}},
                            {"resolution", map.resolution},
                            {"depth_min", lo},
                            {"depth_max", hi}};
  meta << j.dump(2) << "\n";
}

}  // namespace sparsereg
