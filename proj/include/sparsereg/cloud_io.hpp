#pragma once

#include <filesystem>

#include "sparsereg/coordinate_map.hpp"
#include "sparsereg/point_cloud.hpp"

namespace sparsereg {

/// ASCII PLY with a single vertex element carrying x, y, z. Values are
/// written with six decimals (1e-6 mm).
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
/// Reads ASCII PLY; extra vertex properties and elements are skipped.
/// Throws Io or CorruptDataset.
PointCloud read_ply(const std::filesystem::path& path);

/// One "x,y,z" line per point, millimeters.
void write_xyz_csv(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_xyz_csv(const std::filesystem::path& path);

/// Reads .ply or .csv/.xyz by extension.
PointCloud read_cloud(const std::filesystem::path& path);

/// Writes `<stem>.pgm` (P2, 16-bit, 0 = masked, valid depths scaled into
/// [1, 65535]) and `<stem>.json` with scale, origin, resolution and the
/// depth range used for scaling.
void write_depth_map(const std::filesystem::path& stem, const DepthMap& map);

}  // namespace sparsereg
