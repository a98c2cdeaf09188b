#include "mvdepth/motion.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "mvdepth/parallel.h"
#include "mvdepth/sampler.h"

namespace mvdepth {

ResidualFlowField::ResidualFlowField(int height, int width)
    : height_(height), width_(width),
      flow_(static_cast<size_t>(height) * width, Vec2::Zero()),
      confidence_(static_cast<size_t>(height) * width, Vec2::Zero()),
      valid_(height, width, false) {}

void ResidualFlowField::set(int y, int x, const Vec2& flow, const Vec2& confidence) {
  flow_[index(y, x)] = flow;
  confidence_[index(y, x)] = confidence;
  valid_.set(y, x, true);
}

void ResidualFlowField::invalidate(int y, int x) {
  flow_[index(y, x)].setZero();
  confidence_[index(y, x)].setZero();
  valid_.set(y, x, false);
}

// ---------------------------------------------------------------------------
// Patch matcher

namespace {

struct PatchStats {
  double mean = 0.0;
  double norm = 0.0;  // sqrt of the centered sum of squares
};

}  // namespace

ResidualFlowField PatchFlowEstimator::estimate(const FlowRequest& req) const {
  const FeatureMap& a = *req.f_i;
  const FeatureMap& b = *req.f_j_warped;
  const int h = a.height(), w = a.width();
  const int p = patch_radius_, r = search_radius_;
  const int side = 2 * r + 1;
  const int n = (2 * p + 1) * (2 * p + 1);
  ResidualFlowField out(h, w);

  auto patch_ok = [&](const FeatureMap& f, const Mask* m, int y, int x) {
    if (y - p < 0 || x - p < 0 || y + p >= f.height() || x + p >= f.width()) return false;
    if (!m) return true;
    for (int dy = -p; dy <= p; ++dy)
      for (int dx = -p; dx <= p; ++dx)
        if (!(*m)(y + dy, x + dx)) return false;
    return true;
  };
  auto stats = [&](const FeatureMap& f, int y, int x) {
    PatchStats s;
    for (int dy = -p; dy <= p; ++dy)
      for (int dx = -p; dx <= p; ++dx) s.mean += f(y + dy, x + dx, 0);
    s.mean /= n;
    double ss = 0.0;
    for (int dy = -p; dy <= p; ++dy)
      for (int dx = -p; dx <= p; ++dx) {
        const double d = f(y + dy, x + dx, 0) - s.mean;
        ss += d * d;
      }
    s.norm = std::sqrt(ss);
    return s;
  };

  parallel_for(0, h, [&](int y) {
    std::vector<double> score(side * side);
    std::vector<uint8_t> have(side * side);
    for (int x = 0; x < w; ++x) {
      if (!patch_ok(a, nullptr, y, x)) continue;
      const PatchStats sa = stats(a, y, x);
      std::fill(have.begin(), have.end(), 0);
      int best = -1;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (!patch_ok(b, req.warped_valid, yy, xx)) continue;
          const PatchStats sb = stats(b, yy, xx);
          double s = 0.0;
          if (sa.norm > 1e-12 && sb.norm > 1e-12) {
            double cross = 0.0;
            for (int py = -p; py <= p; ++py)
              for (int px = -p; px <= p; ++px)
                cross += (a(y + py, x + px, 0) - sa.mean) * (b(yy + py, xx + px, 0) - sb.mean);
            s = cross / (sa.norm * sb.norm);
          }
          const int idx = (dy + r) * side + (dx + r);
          score[idx] = s;
          have[idx] = 1;
          if (best < 0) {
            best = idx;
            continue;
          }
          // Ties resolve toward the smaller displacement.
          const int bdy = best / side - r, bdx = best % side - r;
          if (s > score[best] ||
              (s == score[best] && dx * dx + dy * dy < bdx * bdx + bdy * bdy)) {
            best = idx;
          }
        }
      }
      if (best < 0) continue;
      const int by = best / side - r, bx = best % side - r;
      const double s0 = score[best];
      // ZNCC never exceeds 1, so an exact match is the continuous optimum.
      const bool exact = s0 >= 1.0 - 1e-9;

      auto axis = [&](int idx_minus, bool ok_minus, int idx_plus, bool ok_plus,
                      double* offset, double* sharp) {
        *offset = 0.0;
        *sharp = 0.0;
        if (ok_minus && ok_plus) {
          const double sm = score[idx_minus], sp = score[idx_plus];
          *sharp = (s0 - 0.5 * (sm + sp)) / 2.0;
          const double denom = sm - 2.0 * s0 + sp;
          if (!exact && denom < 0.0) {
            *offset = std::clamp(0.5 * (sm - sp) / denom, -0.5, 0.5);
          }
        } else if (ok_minus) {
          *sharp = (s0 - score[idx_minus]) / 2.0;
        } else if (ok_plus) {
          *sharp = (s0 - score[idx_plus]) / 2.0;
        }
        *sharp = std::clamp(*sharp, 0.0, 1.0);
      };
      const int bi = (by + r) * side + (bx + r);
      const bool lm = bx > -r && have[bi - 1], lp = bx < r && have[bi + 1];
      const bool um = by > -r && have[bi - side], up = by < r && have[bi + side];
      double ou, su, ov, sv;
      axis(lm ? bi - 1 : bi, lm, lp ? bi + 1 : bi, lp, &ou, &su);
      axis(um ? bi - side : bi, um, up ? bi + side : bi, up, &ov, &sv);
      out.set(y, x, Vec2(bx + ou, by + ov), Vec2(0.005 + 0.99 * su, 0.005 + 0.99 * sv));
    }
  });
  return out;
}

ResidualFlowField estimate_residual_flow(const FeatureMap& f_i,
                                         const FeatureMap& f_j_warped,
                                         const Mask& warped_valid,
                                         const FlowEstimator& estimator,
                                         const FlowRequest& context) {
  if (!f_i.same_shape(f_j_warped)) {
    throw Error(ErrorCode::kDimensionMismatch, "residual flow feature maps differ in shape");
  }
  require_same_size(warped_valid.height(), warped_valid.width(), f_i.height(), f_i.width(),
                    "residual flow mask");
  FlowRequest req = context;
  req.f_i = &f_i;
  req.f_j_warped = &f_j_warped;
  req.warped_valid = &warped_valid;
  ResidualFlowField flow = estimator.estimate(req);
  require_same_size(flow.height(), flow.width(), f_i.height(), f_i.width(),
                    "estimator output");
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x)
      if (flow.valid(y, x) && !warped_valid(y, x)) flow.invalidate(y, x);
  return flow;
}

// ---------------------------------------------------------------------------
// Residuals and Jacobians

FramePairResiduals make_pair_residuals(int i, int j, const ResidualFlowField& flow,
                                       const DepthMap& depth_i, const Intrinsics& k) {
  require_same_size(flow.height(), flow.width(), depth_i.height(), depth_i.width(),
                    "pair residuals flow vs depth");
  FramePairResiduals pair{i, j, {}};
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.valid(y, x) || !depth_i.valid(y, x)) continue;
      PixelResidual rec;
      rec.x = Pixel{double(x), double(y)};
      rec.z = depth_i(y, x);
      rec.r = flow.flow(y, x);
      rec.w = flow.confidence(y, x);
      rec.point = backproject(k, rec.x, rec.z);
      pair.records.push_back(rec);
    }
  }
  return pair;
}

std::optional<Vec2> pair_residual(const PixelResidual& rec, const Pose& g_i,
                                  const Pose& g_j, const Twist& xi_i,
                                  const Twist& xi_j, const Intrinsics& k) {
  const Pose g_ij = g_j * g_i.inverse();
  const Pose moved = (exp_se3(xi_j) * g_j) * (exp_se3(xi_i) * g_i).inverse();
  const auto p_moved = try_project(k, moved.act(rec.point));
  const auto p_now = try_project(k, g_ij.act(rec.point));
  if (!p_moved || !p_now) return std::nullopt;
  return Vec2(rec.r - (p_moved->vec() - p_now->vec()));
}

std::optional<ResidualJacobian> residual_and_jacobian(const PixelResidual& rec,
                                                      const Pose& g_i, const Pose& g_j,
                                                      const Intrinsics& k) {
  const Pose g_ij = g_j * g_i.inverse();
  const Vec3 q = g_ij.act(rec.point);
  const auto p = try_project(k, q);
  if (!p) return std::nullopt;
  ResidualJacobian out;
  out.e = rec.r - (p->vec() - p->vec());
  const Mat26 proj_action = projection_jacobian(k, q) * action_jacobian(q);
  out.d_xi_j = -proj_action;
  out.d_xi_i = proj_action * adjoint(g_ij);
  return out;
}

// ---------------------------------------------------------------------------
// Normal equations

FreeVariables::FreeVariables(int frame_count, std::span<const int> fixed_frames)
    : blocks_(frame_count, 0) {
  for (int f : fixed_frames) {
    if (f < 0 || f >= frame_count) {
      throw Error(ErrorCode::kIndexOutOfRange, "fixed frame " + std::to_string(f));
    }
    blocks_[f] = -1;
  }
  for (int f = 0; f < frame_count; ++f) {
    if (blocks_[f] < 0) continue;
    blocks_[f] = free_count_++;
    frames_.push_back(f);
  }
}

namespace {

struct RowSet {
  std::vector<std::optional<ResidualJacobian>> rows;
};

RowSet linearize_rows(const FramePairResiduals& pair, std::span<const Pose> poses,
                      const Intrinsics& k) {
  RowSet set;
  set.rows.resize(pair.records.size());
  const Pose& gi = poses[pair.i];
  const Pose& gj = poses[pair.j];
  parallel_for(0, static_cast<int>(pair.records.size()), [&](int n) {
    set.rows[n] = residual_and_jacobian(pair.records[n], gi, gj, k);
  });
  return set;
}

// Per-row products round differently above and below the diagonal.
void mirror_upper(Eigen::MatrixXd& h) {
  h.triangularView<Eigen::StrictlyLower>() = h.transpose();
}

void check_constraints(const NormalSystem& sys) {
  for (size_t b = 0; b < sys.frames.size(); ++b) {
    if (sys.constraints[b] < 6) {
      throw Error(ErrorCode::kInsufficientConstraints,
                  "frame " + std::to_string(sys.frames[b]) + " has " +
                      std::to_string(sys.constraints[b]) + " valid pixels");
    }
  }
}

}  // namespace

std::vector<NormalSystem> assemble_system(std::span<const FramePairResiduals> pairs,
                                          PoseMode mode, std::span<const Pose> poses,
                                          const Intrinsics& k, const FreeVariables& free) {
  if (static_cast<int>(poses.size()) != free.frame_count()) {
    throw Error(ErrorCode::kDimensionMismatch, "pose count vs free-variable map");
  }
  std::vector<NormalSystem> systems;

  if (mode == PoseMode::kGlobal) {
    const int m = free.free_count();
    NormalSystem sys;
    sys.h = Eigen::MatrixXd::Zero(6 * m, 6 * m);
    sys.b = Eigen::VectorXd::Zero(6 * m);
    sys.constraints.assign(m, 0);
    for (int bl = 0; bl < m; ++bl) sys.frames.push_back(free.frame_of_block(bl));

    for (const auto& pair : pairs) {
      const int bi = free.block(pair.i), bj = free.block(pair.j);
      if (bi < 0 && bj < 0) continue;
      const RowSet set = linearize_rows(pair, poses, k);
      for (size_t n = 0; n < set.rows.size(); ++n) {
        const auto& row = set.rows[n];
        if (!row) continue;
        const Eigen::Matrix2d wm = pair.records[n].w.asDiagonal();
        sys.objective += row->e.dot(wm * row->e);
        if (bi >= 0) {
          sys.h.block<6, 6>(6 * bi, 6 * bi) += row->d_xi_i.transpose() * wm * row->d_xi_i;
          sys.b.segment<6>(6 * bi) += row->d_xi_i.transpose() * wm * row->e;
          ++sys.constraints[bi];
        }
        if (bj >= 0) {
          sys.h.block<6, 6>(6 * bj, 6 * bj) += row->d_xi_j.transpose() * wm * row->d_xi_j;
          sys.b.segment<6>(6 * bj) += row->d_xi_j.transpose() * wm * row->e;
          ++sys.constraints[bj];
        }
        if (bi >= 0 && bj >= 0) {
          const Mat6 cross = row->d_xi_i.transpose() * wm * row->d_xi_j;
          sys.h.block<6, 6>(6 * bi, 6 * bj) += cross;
          sys.h.block<6, 6>(6 * bj, 6 * bi) += cross.transpose();
        }
      }
    }
    mirror_upper(sys.h);
    check_constraints(sys);
    systems.push_back(std::move(sys));
    return systems;
  }

  // Keyframe: pairs (key, j) each constrain only frame j.
  std::vector<int> system_of_frame(free.frame_count(), -1);
  for (const auto& pair : pairs) {
    if (free.is_free(pair.i)) {
      throw Error(ErrorCode::kInvalidParams,
                  "keyframe mode requires the reference frame of every pair to be fixed");
    }
    if (!free.is_free(pair.j)) continue;
    if (system_of_frame[pair.j] < 0) {
      system_of_frame[pair.j] = static_cast<int>(systems.size());
      NormalSystem sys;
      sys.h = Eigen::MatrixXd::Zero(6, 6);
      sys.b = Eigen::VectorXd::Zero(6);
      sys.frames = {pair.j};
      sys.constraints = {0};
      systems.push_back(std::move(sys));
    }
    NormalSystem& sys = systems[system_of_frame[pair.j]];
    const RowSet set = linearize_rows(pair, poses, k);
    for (size_t n = 0; n < set.rows.size(); ++n) {
      const auto& row = set.rows[n];
      if (!row) continue;
      const Eigen::Matrix2d wm = pair.records[n].w.asDiagonal();
      sys.objective += row->e.dot(wm * row->e);
      sys.h += row->d_xi_j.transpose() * wm * row->d_xi_j;
      sys.b += row->d_xi_j.transpose() * wm * row->e;
      ++sys.constraints[0];
    }
  }
  for (int f = 0; f < free.frame_count(); ++f) {
    if (free.is_free(f) && system_of_frame[f] < 0) {
      throw Error(ErrorCode::kInsufficientConstraints,
                  "frame " + std::to_string(f) + " has no pair with the keyframe");
    }
  }
  std::sort(systems.begin(), systems.end(),
            [](const NormalSystem& a, const NormalSystem& b) { return a.frames[0] < b.frames[0]; });
  for (auto& sys : systems) {
    mirror_upper(sys.h);
    check_constraints(sys);
  }
  return systems;
}

Eigen::VectorXd gauss_newton_step(const NormalSystem& sys, double damping) {
  const Eigen::Index n = sys.b.size();
  if (sys.h.rows() != n || sys.h.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "normal system shape");
  }
  if (damping < 0.0) throw Error(ErrorCode::kInvalidParams, "negative damping");
  Eigen::MatrixXd a = sys.h;
  a.diagonal().array() += damping;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  const double scale = a.diagonal().cwiseAbs().maxCoeff();
  bool ok = llt.info() == Eigen::Success && scale > 0.0;
  if (ok) {
    const Eigen::VectorXd l_diag = llt.matrixL().toDenseMatrix().diagonal();
    ok = l_diag.array().square().minCoeff() > 1e-13 * scale;
  }
  if (!ok) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                "Cholesky failed at damping " + std::to_string(damping));
  }
  return -llt.solve(sys.b);
}

Eigen::VectorXd gauss_newton_step_escalating(const NormalSystem& sys, double damping,
                                             int retries, double* used_damping) {
  double lambda = damping;
  const double base = 1e-6 * std::max(sys.h.diagonal().cwiseAbs().mean(), 1e-12);
  for (int attempt = 0;; ++attempt) {
    try {
      Eigen::VectorXd xi = gauss_newton_step(sys, lambda);
      if (used_damping) *used_damping = lambda;
      return xi;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotPositiveDefinite || attempt >= retries) throw;
      lambda = lambda > 0.0 ? 10.0 * lambda : base;
    }
  }
}

SolveGradients backward_solve(const Eigen::MatrixXd& h, const Eigen::VectorXd& xi,
                              const Eigen::VectorXd& dl_dxi) {
  if (h.rows() != h.cols() || h.rows() != xi.size() || xi.size() != dl_dxi.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "backward_solve shapes");
  }
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite, "backward_solve requires positive definite H");
  }
  SolveGradients g;
  g.d_rhs = h.transpose().partialPivLu().solve(dl_dxi);
  g.d_h = -g.d_rhs * xi.transpose();
  return g;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

void validate_problem(const MotionProblem& problem, std::span<const Pose> poses,
                      const MotionConfig& config) {
  const size_t n = problem.features.size();
  if (n < 2) throw Error(ErrorCode::kInsufficientFrames, "motion needs at least two frames");
  if (poses.size() != n || problem.depths.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "features, depths and poses must align");
  }
  if (config.keyframe < 0 || config.keyframe >= static_cast<int>(n)) {
    throw Error(ErrorCode::kIndexOutOfRange, "keyframe index");
  }
  if (!problem.frame_ids.empty() && problem.frame_ids.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "frame_ids length");
  }
  auto need_depth = [&](size_t f) {
    const DepthMap& d = problem.depths[f];
    require_same_size(d.height(), d.width(), problem.features[f].height(),
                      problem.features[f].width(), "depth for motion");
  };
  if (config.mode == PoseMode::kKeyframe) {
    need_depth(config.keyframe);
  } else {
    for (size_t f = 0; f < n; ++f) need_depth(f);
  }
}

std::vector<int> fixed_frames(const MotionConfig& config) {
  if (config.mode == PoseMode::kKeyframe || config.fixed_frames.empty()) {
    return {config.keyframe};
  }
  return config.fixed_frames;
}

std::vector<std::pair<int, int>> pair_list(int n, const MotionConfig& config,
                                           const FreeVariables& free) {
  std::vector<std::pair<int, int>> out;
  if (config.mode == PoseMode::kKeyframe) {
    for (int j = 0; j < n; ++j)
      if (j != config.keyframe) out.emplace_back(config.keyframe, j);
    return out;
  }
  // One term per unordered pair, referenced at the lower index.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (free.is_free(i) || free.is_free(j)) out.emplace_back(i, j);
  return out;
}

}  // namespace

std::vector<FramePairResiduals> linearize_pairs(const MotionProblem& problem,
                                                std::span<const Pose> poses,
                                                const FlowEstimator& estimator,
                                                const MotionConfig& config) {
  validate_problem(problem, poses, config);
  const int n = static_cast<int>(problem.features.size());
  const auto fixed = fixed_frames(config);
  const FreeVariables free(n, fixed);
  std::vector<FramePairResiduals> pairs;
  for (const auto& [i, j] : pair_list(n, config, free)) {
    const Pose g_ij = poses[j] * poses[i].inverse();
    const WarpResult warped =
        warp_feature_map(problem.features[j], problem.k, g_ij, problem.depths[i]);
    FlowRequest req;
    req.frame_i = problem.frame_ids.empty() ? i : problem.frame_ids[i];
    req.frame_j = problem.frame_ids.empty() ? j : problem.frame_ids[j];
    req.k = &problem.k;
    req.g_i = poses[i];
    req.g_j = poses[j];
    req.depth_i = &problem.depths[i];
    const ResidualFlowField flow = estimate_residual_flow(
        problem.features[i], warped.features, warped.valid, estimator, req);
    pairs.push_back(make_pair_residuals(i, j, flow, problem.depths[i], problem.k));
  }
  return pairs;
}

double evaluate_objective(const MotionProblem& problem, std::span<const Pose> poses,
                          const FlowEstimator& estimator, const MotionConfig& config) {
  double total = 0.0;
  for (const auto& pair : linearize_pairs(problem, poses, estimator, config)) {
    for (const auto& rec : pair.records) {
      // Pixels dropped by cheirality do not enter the objective.
      if (!residual_and_jacobian(rec, poses[pair.i], poses[pair.j], problem.k)) continue;
      total += rec.r.dot(rec.w.asDiagonal() * rec.r);
    }
  }
  return total;
}

MotionResult update_poses(const MotionProblem& problem, std::vector<Pose> poses,
                          const FlowEstimator& estimator, const MotionConfig& config) {
  validate_problem(problem, poses, config);
  const int n = static_cast<int>(poses.size());
  const auto fixed = fixed_frames(config);
  const FreeVariables free(n, fixed);
  MotionResult result;
  for (int it = 0; it < config.iterations; ++it) {
    const auto pairs = linearize_pairs(problem, poses, estimator, config);
    const auto systems = assemble_system(pairs, config.mode, poses, problem.k, free);
    MotionIteration diag;
    double sq = 0.0;
    for (const auto& sys : systems) {
      diag.objective += sys.objective;
      const Eigen::VectorXd xi = gauss_newton_step_escalating(sys, config.damping);
      sq += xi.squaredNorm();
      for (size_t bl = 0; bl < sys.frames.size(); ++bl) {
        const int f = sys.frames[bl];
        poses[f] = exp_se3(xi.segment<6>(6 * bl)) * poses[f];
      }
    }
    diag.step_norm = std::sqrt(sq);
    result.iterations.push_back(diag);
  }
  result.poses = std::move(poses);
  return result;
}

std::vector<Pose> initialize_poses(int frame_count) {
  return std::vector<Pose>(std::max(frame_count, 0), Pose::identity());
}

std::vector<Pose> coarse_initialize_poses(const MotionProblem& problem,
                                          const FlowEstimator& estimator, int keyframe,
                                          int samples, double max_rot_deg,
                                          double max_trans_m, uint64_t seed) {
  const int n = static_cast<int>(problem.features.size());
  std::vector<Pose> poses = initialize_poses(n);
  if (n < 2) return poses;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto ball = [&](double radius) {
    Vec3 d(gauss(rng), gauss(rng), gauss(rng));
    d.normalize();
    return Vec3(d * radius * std::cbrt(unit(rng)));
  };
  const double max_rot = max_rot_deg * M_PI / 180.0;

  for (int j = 0; j < n; ++j) {
    if (j == keyframe) continue;
    double best_score = std::numeric_limits<double>::infinity();
    Pose best = Pose::identity();
    for (int s = 0; s <= samples; ++s) {
      const Pose candidate =
          s == 0 ? Pose::identity() : exp_se3(make_twist(ball(max_trans_m), ball(max_rot)));
      std::vector<Pose> trial = poses;
      trial[j] = candidate;
      const Pose g_ij = candidate * trial[keyframe].inverse();
      const WarpResult warped = warp_feature_map(problem.features[j], problem.k, g_ij,
                                                 problem.depths[keyframe]);
      FlowRequest req;
      req.frame_i = problem.frame_ids.empty() ? keyframe : problem.frame_ids[keyframe];
      req.frame_j = problem.frame_ids.empty() ? j : problem.frame_ids[j];
      req.k = &problem.k;
      req.g_i = trial[keyframe];
      req.g_j = candidate;
      req.depth_i = &problem.depths[keyframe];
      const ResidualFlowField flow = estimate_residual_flow(
          problem.features[keyframe], warped.features, warped.valid, estimator, req);
      double sum = 0.0;
      size_t count = 0;
      for (int y = 0; y < flow.height(); ++y)
        for (int x = 0; x < flow.width(); ++x) {
          if (!flow.valid(y, x)) continue;
          const Vec2 weighted = flow.confidence(y, x).cwiseSqrt().cwiseProduct(flow.flow(y, x));
          sum += weighted.norm();
          ++count;
        }
      const double score = count ? sum / count : std::numeric_limits<double>::infinity();
      if (score < best_score) {
        best_score = score;
        best = candidate;
      }
    }
    poses[j] = best;
  }
  return poses;
}

}  // namespace mvdepth
