#include "mvdepth/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mvdepth/io.h"

namespace mvdepth {

void FrameSet::validate(int min_frames) const {
  if (size() < min_frames) {
    throw Error(ErrorCode::kInsufficientFrames, std::to_string(size()) + " frames, need " +
                                                    std::to_string(min_frames));
  }
  if (static_cast<int>(timestamps.size()) != size()) {
    throw Error(ErrorCode::kInvalidParams, "one timestamp per frame required");
  }
  for (int i = 1; i < size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw Error(ErrorCode::kInvalidParams, "timestamps must be strictly increasing");
    }
  }
  if (keyframe < 0 || keyframe >= size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "keyframe index");
  }
  for (const auto& f : features) {
    require_same_size(f.height(), f.width(), k.height, k.width, "frame vs intrinsics");
    if (f.channels() != features.front().channels()) {
      throw Error(ErrorCode::kDimensionMismatch, "frames differ in channel count");
    }
  }
}

DepthMap init_depth_constant(int height, int width, double z_min, double z_max) {
  if (height <= 0 || width <= 0) throw Error(ErrorCode::kInvalidParams, "depth size");
  if (!(z_min > 0.0) || !(z_max > z_min)) {
    throw Error(ErrorCode::kInvalidRange, "need 0 < z_min < z_max");
  }
  return DepthMap::constant(height, width, std::sqrt(z_min * z_max));
}

DepthMap init_depth_external(const std::filesystem::path& path, int height, int width,
                             double scale) {
  const DepthMap d = path.extension() == ".png" ? read_depth16(path, scale)
                                                : depth_from_grid(read_grid(path));
  require_same_size(d.height(), d.width(), height, width, path.string().c_str());
  return d;
}

DiagnosticRow pipeline_diagnostic(int iter, const DepthMap& depth, std::span<const Pose> poses,
                                  int keyframe, const GroundTruth& truth) {
  DiagnosticRow row;
  row.iter = iter;
  const ScaleMatch sm = scale_match(depth, truth.keyframe_depth);
  row.sc_inv = depth_metrics(depth, truth.keyframe_depth).sc_inv;
  const Pose key_inv = poses[keyframe].inverse();
  const Pose true_key_inv = truth.poses[keyframe].inverse();
  for (size_t j = 0; j < poses.size(); ++j) {
    if (static_cast<int>(j) == keyframe) continue;
    const Pose est = poses[j] * key_inv;
    const Pose ref = truth.poses[j] * true_key_inv;
    const Pose scaled(est.rotation(), sm.scale * est.translation());
    const PoseError e = pose_metrics(scaled, ref);
    row.rot_deg = std::max(row.rot_deg, e.rot_deg);
    row.trans_cm = std::max(row.trans_cm, e.trans_cm);
  }
  return row;
}

PipelineResult alternate(const FrameSet& frames, const FlowEstimator& estimator,
                         const PipelineConfig& config, const DepthMap& initial_depth,
                         const GroundTruth* truth) {
  frames.validate(2);
  if (config.iterations < 0 || config.motion_iterations < 1) {
    throw Error(ErrorCode::kInvalidParams, "iteration counts");
  }
  const int n = frames.size();
  const int key = frames.keyframe;
  require_same_size(initial_depth.height(), initial_depth.width(), frames.k.height,
                    frames.k.width, "initial depth");
  if (truth && static_cast<int>(truth->poses.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "ground-truth pose count");
  }
  const DepthHypotheses hyp =
      depth_hypotheses(config.depth_min, config.depth_max, config.hypotheses, config.spacing);
  SweepOptions sweep;
  sweep.temperature = config.temperature;

  PipelineResult out;
  out.poses = initialize_poses(n);
  out.depths.assign(n, initial_depth);
  if (truth) out.diagnostics.push_back(pipeline_diagnostic(0, initial_depth, out.poses, key, *truth));

  MotionConfig motion;
  motion.mode = config.mode;
  motion.iterations = config.motion_iterations;
  motion.damping = config.damping;
  motion.keyframe = key;

  for (int it = 1; it <= config.iterations; ++it) {
    MotionProblem problem{frames.features, out.depths, frames.k, {}};
    out.poses = update_poses(problem, out.poses, estimator, motion).poses;
    if (config.mode == PoseMode::kKeyframe) {
      out.depths[key] = estimate_depth(frames.features, out.poses, key, frames.k, hyp, sweep);
    } else {
      for (int f = 0; f < n; ++f) {
        out.depths[f] = estimate_depth(frames.features, out.poses, f, frames.k, hyp, sweep);
      }
    }
    if (truth) {
      out.diagnostics.push_back(pipeline_diagnostic(it, out.depths[key], out.poses, key, *truth));
    }
  }
  out.depth = out.depths[key];
  if (config.mode == PoseMode::kKeyframe) out.depths.clear();
  return out;
}

std::string format_diagnostics(const std::vector<DiagnosticRow>& rows) {
  std::string out;
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d\t%.9g\t%.9g\t%.9g\n", r.iter, r.rot_deg, r.trans_cm,
                  r.sc_inv);
    out += buf;
  }
  return out;
}

Trajectory track(const FrameSet& frames, std::span<const DepthMap> depths,
                 const FlowEstimator& estimator, const TrackConfig& config) {
  if (config.window < 2 || config.fixed < 1 || config.fixed >= config.window ||
      config.iterations < 1) {
    throw Error(ErrorCode::kInvalidParams, "tracking window settings");
  }
  frames.validate(config.window);
  const int n = frames.size();
  if (static_cast<int>(depths.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "one depth map per frame required");
  }
  std::vector<Pose> poses(n, Pose::identity());

  auto optimize = [&](int begin, int count, int fixed) {
    std::vector<int> ids(count);
    for (int w = 0; w < count; ++w) ids[w] = begin + w;
    MotionProblem problem{
        std::span<const FeatureMap>(frames.features).subspan(begin, count),
        depths.subspan(begin, count), frames.k, ids};
    MotionConfig cfg;
    cfg.mode = PoseMode::kGlobal;
    cfg.iterations = config.iterations;
    cfg.damping = config.damping;
    cfg.keyframe = 0;
    for (int w = 0; w < fixed; ++w) cfg.fixed_frames.push_back(w);
    std::vector<Pose> local(poses.begin() + begin, poses.begin() + begin + count);
    local = update_poses(problem, std::move(local), estimator, cfg).poses;
    std::copy(local.begin(), local.end(), poses.begin() + begin);
  };

  for (int count = 2; count <= config.window; ++count) {
    poses[count - 1] = poses[count - 2];
    optimize(0, count, 1);
  }
  for (int last = config.window; last < n; ++last) {
    poses[last] = poses[last - 1];
    optimize(last - config.window + 1, config.window, config.fixed);
  }

  Trajectory out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back({frames.timestamps[i], poses[i].inverse()});
  return out;
}

}  // namespace mvdepth
