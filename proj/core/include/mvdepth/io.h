#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Geometry>

#include "mvdepth/costvol.h"
#include "mvdepth/image.h"
#include "mvdepth/metrics.h"
#include "mvdepth/motion.h"
#include "mvdepth/scene.h"

namespace mvdepth {

namespace fs = std::filesystem;

// One line of a TUM trajectory file: camera-to-world translation and
// orientation (qx qy qz qw on disk).
struct TrajectoryRecord {
  double timestamp = 0.0;
  Vec3 translation = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

inline constexpr double kQuaternionRepairTolerance = 1e-3;

// Sorted by timestamp. Quaternions within 1e-3 of unit norm are normalized
// and reported through `warnings`; others throw kNonUnitQuaternion.
std::vector<TrajectoryRecord> read_trajectory(const fs::path& path,
                                              std::vector<std::string>* warnings = nullptr);
// Shortest round-trip decimal formatting.
void write_trajectory(const std::vector<TrajectoryRecord>& records, const fs::path& path);

Trajectory to_trajectory(const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> to_records(const Trajectory& trajectory);

// 16-bit grayscale PNG, stored = round(depth * scale), 0 = invalid. Returns
// the number of pixels clamped to 65535.
size_t write_depth16(const DepthMap& depth, const fs::path& path, double scale);
DepthMap read_depth16(const fs::path& path, double scale);

// Binary grid: "V2DG", u32 H W D C little-endian, then H*W*D*C f32 in
// row-major (h, w, d, c) order.
struct Grid {
  uint32_t h = 0, w = 0, d = 0, c = 0;
  std::vector<float> data;
};

void write_grid(const Grid& grid, const fs::path& path);
Grid read_grid(const fs::path& path);

// Invalid depth and flow entries are NaN, invalid scores -inf.
Grid to_grid(const DepthMap& depth);
Grid to_grid(const FeatureMap& features);
Grid to_grid(const MatchVolume& volume);
Grid to_grid(const ResidualFlowField& flow);  // C = 4: flow u, v, conf u, v
DepthMap depth_from_grid(const Grid& grid);
FeatureMap features_from_grid(const Grid& grid);

// `key = value` lines; blank lines and `#` comments skipped. Each entry keeps
// its 1-based line number for error messages.
struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};
std::vector<KeyValue> read_key_values(const fs::path& path);

void write_scene_description(const SceneParams& params, const fs::path& path);
// Unknown keys and unparsable values throw kFormatError.
SceneParams read_scene_description(const fs::path& path);

}  // namespace mvdepth
