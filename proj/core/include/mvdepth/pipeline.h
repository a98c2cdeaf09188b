#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvdepth/costvol.h"
#include "mvdepth/image.h"
#include "mvdepth/metrics.h"
#include "mvdepth/motion.h"

namespace mvdepth {

struct FrameSet {
  std::vector<FeatureMap> features;
  std::vector<double> timestamps;  // seconds, strictly increasing
  int keyframe = 0;
  Intrinsics k;

  int size() const { return static_cast<int>(features.size()); }
  // Throws kInsufficientFrames below `min_frames`, kInvalidParams on bad
  // timestamps or keyframe, kDimensionMismatch on mixed shapes.
  void validate(int min_frames = 2) const;
};

// sqrt(z_min * z_max) everywhere.
DepthMap init_depth_constant(int height, int width, double z_min, double z_max);
// 16-bit PNG (at `scale`) or V2DG grid, chosen by extension.
DepthMap init_depth_external(const std::filesystem::path& path, int height, int width,
                             double scale = 5000.0);

struct PipelineConfig {
  int iterations = 8;
  PoseMode mode = PoseMode::kKeyframe;
  int motion_iterations = 1;  // Gauss-Newton steps per motion update
  double damping = 0.0;
  double depth_min = 0.2;
  double depth_max = 10.0;
  int hypotheses = 32;
  DepthSpacing spacing = DepthSpacing::kInverse;
  double temperature = 1.0;
};

// Ground truth for diagnostics. poses are world-to-camera.
struct GroundTruth {
  std::vector<Pose> poses;
  DepthMap keyframe_depth;
};

// Pose error is the worst non-keyframe relative pose (to the keyframe) after
// scaling estimated translations by the depth scale-match factor.
struct DiagnosticRow {
  int iter = 0;
  double rot_deg = 0.0;
  double trans_cm = 0.0;
  double sc_inv = 0.0;
};

struct PipelineResult {
  DepthMap depth;               // keyframe depth
  std::vector<DepthMap> depths; // every frame's depth in Global mode
  std::vector<Pose> poses;      // world-to-camera, keyframe at identity
  std::vector<DiagnosticRow> diagnostics;  // row 0 is the initialization
};

DiagnosticRow pipeline_diagnostic(int iter, const DepthMap& depth, std::span<const Pose> poses,
                                  int keyframe, const GroundTruth& truth);

// Motion then depth per iteration, starting from identity poses and
// `initial_depth` (replicated to every frame in Global mode).
PipelineResult alternate(const FrameSet& frames, const FlowEstimator& estimator,
                         const PipelineConfig& config, const DepthMap& initial_depth,
                         const GroundTruth* truth = nullptr);

// `iter<TAB>rot_deg<TAB>trans_cm<TAB>sc_inv` rows.
std::string format_diagnostics(const std::vector<DiagnosticRow>& rows);

struct TrackConfig {
  int window = 8;
  int fixed = 3;
  int iterations = 5;  // Gauss-Newton steps per window position
  double damping = 0.0;
};

// Sliding-window tracker over per-frame supplied depth. The window first grows
// from 2 frames (frame 0 fixed), then slides by one frame with its first
// `fixed` poses held. A new frame starts at its predecessor's pose. Returns
// camera-to-world poses stamped with the frame timestamps. Throws
// kInsufficientFrames for streams shorter than the window.
Trajectory track(const FrameSet& frames, std::span<const DepthMap> depths,
                 const FlowEstimator& estimator, const TrackConfig& config);

}  // namespace mvdepth
