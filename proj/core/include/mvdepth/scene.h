#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvdepth/camera.h"
#include "mvdepth/image.h"
#include "mvdepth/lie.h"
#include "mvdepth/metrics.h"
#include "mvdepth/motion.h"

namespace mvdepth {

enum class TrajectoryShape { kStatic, kLine, kArc };

std::string to_string(TrajectoryShape shape);
TrajectoryShape parse_trajectory_shape(const std::string& s);

struct SceneParams {
  int width = 64;
  int height = 64;
  double focal = 0.0;  // pixels; 0 selects `width`
  double depth_min = 1.0;
  double depth_max = 5.0;
  int fronto_planes = 2;
  int tilted_planes = 2;
  int spheres = 2;
  bool background = true;
  double background_depth = 0.0;  // 0 selects 85% of the depth range
  TrajectoryShape shape = TrajectoryShape::kLine;
  int frames = 4;
  double step = 0.05;          // meters per frame along a line
  double arc_step_deg = 1.5;   // yaw per frame along an arc
  double frame_interval = 0.1; // seconds
  uint64_t seed = 0;

  // Throws kInvalidParams.
  void validate() const;
  Intrinsics intrinsics() const;
};

// Sum of sinusoids over world coordinates; band-limited so images sample it
// without aliasing at the primitive's nominal depth.
struct Texture {
  struct Wave {
    Vec3 frequency;  // rad / m
    double phase = 0.0;
    double amplitude = 0.0;
  };
  double base = 128.0;
  std::vector<Wave> waves;

  double value(const Vec3& p) const;
};

// Planar rectangle (infinite when the half extents are infinite).
struct PlanePatch {
  Vec3 center;
  Vec3 normal;
  Vec3 axis_u;
  Vec3 axis_v;
  double half_u = 0.0;
  double half_v = 0.0;
  Texture texture;
};

struct Sphere {
  Vec3 center;
  double radius = 0.0;
  Texture texture;
};

struct SyntheticScene {
  SceneParams params;
  Intrinsics k;
  std::vector<PlanePatch> planes;
  std::vector<Sphere> spheres;
  std::vector<Pose> poses;          // world-to-camera, poses[0] is identity
  std::vector<double> timestamps;

  int frame_count() const { return static_cast<int>(poses.size()); }
  Trajectory trajectory() const;    // camera-to-world, TUM convention
};

SyntheticScene generate_scene(const SceneParams& params);

struct RayHit {
  double depth = 0.0;  // camera-frame Z
  double intensity = 0.0;
};

// Nearest surface along the ray through `x` of a camera with world-to-camera
// pose `g`, ignoring hits outside [depth_min, depth_max].
std::optional<RayHit> cast_ray(const SyntheticScene& scene, const Pose& g, const Pixel& x);

struct RenderedView {
  FeatureMap features;  // intensity, d/du, d/dv
  DepthMap depth;
};

RenderedView render_view(const SyntheticScene& scene, int frame);

// Features from an intensity image: intensity plus central-difference
// gradients (one-sided at the border).
FeatureMap intensity_features(const FeatureMap& intensity);

inline constexpr double kOracleConfidence = 0.99;

// Exact residual flow pi(G*_ij X*) - pi(G_ij X) between true geometry and the
// supplied poses/depth. Pixels whose true correspondence is occluded or leaves
// the frame are invalid.
ResidualFlowField oracle_flow(const SyntheticScene& scene, int i, int j,
                              const Pose& g_i, const Pose& g_j, const DepthMap& depth_i);

class OracleFlowEstimator : public FlowEstimator {
 public:
  explicit OracleFlowEstimator(const SyntheticScene& scene) : scene_(scene) {}
  ResidualFlowField estimate(const FlowRequest& request) const override;

 private:
  const SyntheticScene& scene_;
};

// R' = exp(phi) R and t' = t + delta with phi and delta uniform in balls of
// the given radii. Equivalent to exp(xi) g for the matching left twist xi.
Pose perturb_pose(const Pose& g, double max_rot_deg, double max_trans_m, uint64_t seed);

}  // namespace mvdepth
