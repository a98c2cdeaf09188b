#pragma once

#include <string>
#include <vector>

#include "mvdepth/camera.h"
#include "mvdepth/image.h"
#include "mvdepth/lie.h"

namespace mvdepth {

inline constexpr double kDefaultSmoothnessWeight = 0.02;
inline constexpr double kHuberDelta = 1.0;
inline constexpr double kDefaultMotionWeight = 1.0;

// Sum |Z - Z*| over jointly valid pixels plus w_s times the L1 of forward
// differences of Z (both ends of a difference must be jointly valid).
double depth_loss(const DepthMap& z, const DepthMap& z_star,
                  double w_s = kDefaultSmoothnessWeight);

// d depth_loss / d Z per pixel (sign convention at kinks: sign(0) = 0).
std::vector<double> depth_loss_gradient(const DepthMap& z, const DepthMap& z_star,
                                        double w_s = kDefaultSmoothnessWeight);

double huber(double a, double delta = kHuberDelta);

// Huber of the reprojection displacement between g and g_star over every valid
// pixel of z. Pixels failing cheirality under either pose are skipped.
double motion_loss(const Pose& g, const Pose& g_star, const DepthMap& z,
                   const Intrinsics& k);

inline double total_loss(double l_depth, double l_motion,
                         double lambda = kDefaultMotionWeight) {
  return l_depth + lambda * l_motion;
}

struct ScaleMatch {
  double scale = 1.0;
  DepthMap scaled;
};

// Median of Z*/Z over jointly valid pixels (mean of the middle pair for an
// even count).
ScaleMatch scale_match(const DepthMap& z, const DepthMap& z_star);

struct MetricReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double log10 = 0.0;
  double sc_inv = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  size_t pixels = 0;
};

MetricReport depth_metrics(const DepthMap& z, const DepthMap& z_star);

// `name<TAB>value` rows, one per metric, fixed order.
std::string format_metric_rows(const MetricReport& m);
// `name = value` lines.
std::string format_metric_block(const MetricReport& m);

struct PoseError {
  double rot_deg = 0.0;
  double trans_dir_deg = 0.0;
  double trans_cm = 0.0;
};

PoseError pose_metrics(const Pose& g, const Pose& g_star);

struct StampedPose {
  double timestamp = 0.0;
  Pose pose;  // camera-to-world
};
using Trajectory = std::vector<StampedPose>;

inline constexpr double kAssociationTolerance = 0.02;

// Relative-pose-error translational drift (m/s) over pose pairs one window
// apart, after nearest-timestamp association within `tolerance` seconds.
double trajectory_rmse(const Trajectory& estimated, const Trajectory& reference,
                       double window = 1.0, double tolerance = kAssociationTolerance);

}  // namespace mvdepth
