#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvdepth/camera.h"
#include "mvdepth/image.h"
#include "mvdepth/lie.h"

namespace mvdepth {

// Dense residual flow r_k and per-axis confidences (w_u, w_v) in (0, 1).
class ResidualFlowField {
 public:
  ResidualFlowField() = default;
  ResidualFlowField(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }

  const Vec2& flow(int y, int x) const { return flow_[index(y, x)]; }
  const Vec2& confidence(int y, int x) const { return confidence_[index(y, x)]; }
  bool valid(int y, int x) const { return valid_(y, x); }
  const Mask& mask() const { return valid_; }

  void set(int y, int x, const Vec2& flow, const Vec2& confidence);
  void invalidate(int y, int x);

 private:
  size_t index(int y, int x) const { return static_cast<size_t>(y) * width_ + x; }
  int height_ = 0, width_ = 0;
  std::vector<Vec2> flow_;
  std::vector<Vec2> confidence_;
  Mask valid_;
};

// Everything a flow estimator may look at for one ordered frame pair.
struct FlowRequest {
  int frame_i = 0;  // identifiers understood by the estimator
  int frame_j = 0;
  const FeatureMap* f_i = nullptr;
  const FeatureMap* f_j_warped = nullptr;
  const Mask* warped_valid = nullptr;
  const Intrinsics* k = nullptr;
  Pose g_i;  // current world-to-camera estimates
  Pose g_j;
  const DepthMap* depth_i = nullptr;
};

class FlowEstimator {
 public:
  virtual ~FlowEstimator() = default;
  virtual ResidualFlowField estimate(const FlowRequest& request) const = 0;
};

// Zero-normalized cross-correlation block matcher on channel 0. Displacements
// are searched in [-radius, radius]^2, refined per axis with a parabola, and
// confidences are 0.005 + 0.99 * (peak sharpness along that axis).
class PatchFlowEstimator : public FlowEstimator {
 public:
  PatchFlowEstimator(int search_radius = 3, int patch_radius = 3)
      : search_radius_(search_radius), patch_radius_(patch_radius) {}
  ResidualFlowField estimate(const FlowRequest& request) const override;

 private:
  int search_radius_;
  int patch_radius_;
};

// Runs the estimator and drops pixels where the warped features are invalid.
ResidualFlowField estimate_residual_flow(const FeatureMap& f_i,
                                         const FeatureMap& f_j_warped,
                                         const Mask& warped_valid,
                                         const FlowEstimator& estimator,
                                         const FlowRequest& context);

struct PixelResidual {
  Pixel x;
  double z = 0.0;
  Vec2 r = Vec2::Zero();
  Vec2 w = Vec2::Zero();
  Vec3 point = Vec3::Zero();  // pi^-1(x, z) in camera i
};

struct FramePairResiduals {
  int i = 0;
  int j = 0;
  std::vector<PixelResidual> records;
};

// Collects pixels valid in both the flow field and depth_i.
FramePairResiduals make_pair_residuals(int i, int j, const ResidualFlowField& flow,
                                       const DepthMap& depth_i, const Intrinsics& k);

// e_k(xi_i, xi_j) = r_k - [pi((exp(xi_j) G_j)(exp(xi_i) G_i)^-1 X) - pi(G_ij X)].
// Empty when a transformed point fails cheirality.
std::optional<Vec2> pair_residual(const PixelResidual& rec, const Pose& g_i,
                                  const Pose& g_j, const Twist& xi_i,
                                  const Twist& xi_j, const Intrinsics& k);

struct ResidualJacobian {
  Vec2 e = Vec2::Zero();
  Mat26 d_xi_i = Mat26::Zero();
  Mat26 d_xi_j = Mat26::Zero();
};

// Residual and its derivatives at xi_i = xi_j = 0.
std::optional<ResidualJacobian> residual_and_jacobian(const PixelResidual& rec,
                                                      const Pose& g_i, const Pose& g_j,
                                                      const Intrinsics& k);

// Maps frame index to its 6-wide block in the solve, or -1 if held fixed.
class FreeVariables {
 public:
  FreeVariables(int frame_count, std::span<const int> fixed_frames);
  int block(int frame) const { return blocks_[frame]; }
  bool is_free(int frame) const { return blocks_[frame] >= 0; }
  int free_count() const { return free_count_; }
  int frame_count() const { return static_cast<int>(blocks_.size()); }
  int frame_of_block(int b) const { return frames_[b]; }

 private:
  std::vector<int> blocks_;
  std::vector<int> frames_;
  int free_count_ = 0;
};

struct NormalSystem {
  Eigen::MatrixXd h;        // sum J^T W J
  Eigen::VectorXd b;        // sum J^T W e
  std::vector<int> frames;  // block -> frame index
  std::vector<size_t> constraints;  // valid pixels touching each block
  double objective = 0.0;   // sum e^T W e at the linearization point
};

// Keyframe: pairs (keyframe, j). Global: every unordered pair once, as
// (i, j) with i < j, so the keyframe terms are a subset of the global ones.
enum class PoseMode { kKeyframe, kGlobal };

// Global: one system over all free frames. Keyframe: one 6x6 system per
// non-keyframe frame (pairs must all start at the keyframe). Throws
// kInsufficientConstraints if a free block sees fewer than 6 pixels.
std::vector<NormalSystem> assemble_system(std::span<const FramePairResiduals> pairs,
                                          PoseMode mode, std::span<const Pose> poses,
                                          const Intrinsics& k, const FreeVariables& free);

// xi* = -(H + damping I)^-1 b by Cholesky. Throws kNotPositiveDefinite.
Eigen::VectorXd gauss_newton_step(const NormalSystem& sys, double damping = 0.0);

// Retries with damping escalated x10 up to `retries` times after a failed
// factorization. Reports the damping that succeeded.
Eigen::VectorXd gauss_newton_step_escalating(const NormalSystem& sys, double damping,
                                             int retries = 4,
                                             double* used_damping = nullptr);

// Gradients of xi = H^-1 rhs given dL/dxi: dL/drhs = H^-T dL/dxi and
// dL/dH = -(H^-T dL/dxi) xi^T (entrywise).
struct SolveGradients {
  Eigen::MatrixXd d_h;
  Eigen::VectorXd d_rhs;
};
SolveGradients backward_solve(const Eigen::MatrixXd& h, const Eigen::VectorXd& xi,
                              const Eigen::VectorXd& dl_dxi);

struct MotionProblem {
  std::span<const FeatureMap> features;
  std::span<const DepthMap> depths;  // Global needs all; Keyframe only keyframe
  Intrinsics k;
  std::vector<int> frame_ids;        // passed to estimators; defaults to 0..N-1
};

struct MotionConfig {
  PoseMode mode = PoseMode::kKeyframe;
  int iterations = 1;
  double damping = 0.0;
  int keyframe = 0;
  std::vector<int> fixed_frames;  // Global mode; defaults to {keyframe}
};

struct MotionIteration {
  double objective = 0.0;  // before the step
  double step_norm = 0.0;
};

struct MotionResult {
  std::vector<Pose> poses;
  std::vector<MotionIteration> iterations;
};

std::vector<FramePairResiduals> linearize_pairs(const MotionProblem& problem,
                                                std::span<const Pose> poses,
                                                const FlowEstimator& estimator,
                                                const MotionConfig& config);

// Sum of e^T W e over all pairs at the given poses (the weighted objective
// re-evaluated with fresh flow).
double evaluate_objective(const MotionProblem& problem, std::span<const Pose> poses,
                          const FlowEstimator& estimator, const MotionConfig& config);

MotionResult update_poses(const MotionProblem& problem, std::vector<Pose> poses,
                          const FlowEstimator& estimator, const MotionConfig& config);

// Keyframe is the identity; other frames start at the identity as well.
std::vector<Pose> initialize_poses(int frame_count);

// For each non-keyframe frame keeps the best of `samples` random twists (plus
// the identity) by mean weighted residual-flow magnitude.
std::vector<Pose> coarse_initialize_poses(const MotionProblem& problem,
                                          const FlowEstimator& estimator, int keyframe,
                                          int samples, double max_rot_deg,
                                          double max_trans_m, uint64_t seed);

}  // namespace mvdepth
