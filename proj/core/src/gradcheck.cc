#include "mvdepth/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include <Eigen/Dense>

#include "mvdepth/camera.h"
#include "mvdepth/costvol.h"
#include "mvdepth/lie.h"
#include "mvdepth/motion.h"
#include "mvdepth/sampler.h"

namespace mvdepth {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Rng = std::mt19937_64;

constexpr double kStep = 1e-6;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 random_vec(Rng& rng, double scale) {
  return Vec3(uniform(rng, -scale, scale), uniform(rng, -scale, scale),
              uniform(rng, -scale, scale));
}

Pose random_pose(Rng& rng, double rot, double trans) {
  return exp_se3(make_twist(random_vec(rng, trans), random_vec(rng, rot)));
}

// Central differences of f around x, columns per coordinate.
MatrixXd numeric_jacobian(const std::function<VectorXd(const VectorXd&)>& f,
                          const VectorXd& x) {
  const VectorXd f0 = f(x);
  MatrixXd j(f0.size(), x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    VectorXd lo = x, hi = x;
    lo[c] -= kStep;
    hi[c] += kStep;
    j.col(c) = (f(hi) - f(lo)) / (2.0 * kStep);
  }
  return j;
}

double relative_error(const MatrixXd& analytic, const MatrixXd& numeric) {
  const double scale =
      std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-8});
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

struct Check {
  MatrixXd analytic;
  MatrixXd numeric;
};

using Trial = std::function<Check(Rng&)>;

Intrinsics random_intrinsics(Rng& rng) {
  const double f = uniform(rng, 40.0, 80.0);
  return Intrinsics{f, f * uniform(rng, 0.9, 1.1), uniform(rng, 28.0, 36.0),
                    uniform(rng, 28.0, 36.0), 64, 64};
}

FeatureMap random_features(Rng& rng, int h, int w, int c) {
  FeatureMap f(h, w, c);
  for (double& v : f.data()) v = uniform(rng, -1.0, 1.0);
  return f;
}

// Keeps finite differences inside one bilinear cell.
bool near_grid_line(double v) {
  const double frac = v - std::floor(v);
  return frac < 1e-3 || frac > 1.0 - 1e-3;
}

Check check_action(Rng& rng) {
  const Vec3 x = random_vec(rng, 3.0);
  auto f = [&](const VectorXd& xi) -> VectorXd { return exp_se3(Twist(xi)).act(x); };
  return {action_jacobian(x), numeric_jacobian(f, VectorXd::Zero(6))};
}

Check check_projection(Rng& rng) {
  const Intrinsics k = random_intrinsics(rng);
  const Vec3 x(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, 0.5, 5.0));
  auto f = [&](const VectorXd& p) -> VectorXd { return project(k, Vec3(p)).vec(); };
  return {projection_jacobian(k, x), numeric_jacobian(f, x)};
}

Check check_sampler(Rng& rng) {
  const FeatureMap f = random_features(rng, 8, 8, 3);
  const Vec2 p(std::floor(uniform(rng, 0.0, 7.0)) + uniform(rng, 0.05, 0.95),
               std::floor(uniform(rng, 0.0, 7.0)) + uniform(rng, 0.05, 0.95));
  auto sample = [&](const VectorXd& q) -> VectorXd {
    return bilinear_sample(f, Pixel{q[0], q[1]}).values;
  };
  return {bilinear_sample(f, Pixel{p.x(), p.y()}).gradient, numeric_jacobian(sample, p)};
}

Check check_soft_argmax(Rng& rng) {
  const int d = 8;
  std::vector<double> depths(d), scores(d), weights(d);
  double z = uniform(rng, 0.5, 1.0);
  for (int i = 0; i < d; ++i) {
    depths[i] = z;
    z += uniform(rng, 0.1, 0.6);
    scores[i] = uniform(rng, -3.0, 0.0);
  }
  const double t = uniform(rng, 0.5, 2.0);
  const auto g = soft_argmax_gradient(scores, depths, t);
  auto f = [&](const VectorXd& s) -> VectorXd {
    std::vector<double> sv(s.data(), s.data() + s.size()), w(d);
    return VectorXd::Constant(1, *soft_argmax(sv, depths, t, w));
  };
  return {Eigen::Map<const Eigen::RowVectorXd>(g.data(), d),
          numeric_jacobian(f, Eigen::Map<const VectorXd>(scores.data(), d))};
}

Check check_cell_pose(Rng& rng) {
  const Intrinsics k{40.0, 40.0, 15.5, 15.5, 32, 32};
  const FeatureMap fj = random_features(rng, 32, 32, 3);
  for (;;) {
    const Pose g = random_pose(rng, 0.05, 0.1);
    const Pixel x{uniform(rng, 6.0, 25.0), uniform(rng, 6.0, 25.0)};
    const double z = uniform(rng, 1.0, 4.0);
    const auto p = try_reproject(k, g, x, z);
    if (!p || !p->in_bounds(k) || p->u > k.width - 2 || p->v > k.height - 2 ||
        near_grid_line(p->u) || near_grid_line(p->v)) {
      continue;
    }
    const auto jac = cost_cell_pose_jacobian(fj, k, g, x, z);
    if (!jac) continue;
    auto f = [&](const VectorXd& xi) -> VectorXd {
      const Pixel q = reproject(k, exp_se3(Twist(xi)) * g, x, z);
      return bilinear_sample(fj, q).values;
    };
    return {*jac, numeric_jacobian(f, VectorXd::Zero(6))};
  }
}

PixelResidual random_record(Rng& rng, const Intrinsics& k) {
  PixelResidual rec;
  rec.x = Pixel{uniform(rng, 5.0, 58.0), uniform(rng, 5.0, 58.0)};
  rec.z = uniform(rng, 1.0, 5.0);
  rec.r = Vec2(uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0));
  rec.w = Vec2(uniform(rng, 0.1, 1.0), uniform(rng, 0.1, 1.0));
  rec.point = backproject(k, rec.x, rec.z);
  return rec;
}

Check check_residual(Rng& rng, bool wrt_i) {
  const Intrinsics k = random_intrinsics(rng);
  for (;;) {
    const Pose g_i = random_pose(rng, 0.1, 0.2);
    const Pose g_j = random_pose(rng, 0.1, 0.2);
    const PixelResidual rec = random_record(rng, k);
    const auto rj = residual_and_jacobian(rec, g_i, g_j, k);
    if (!rj) continue;
    auto f = [&](const VectorXd& xi) -> VectorXd {
      const Twist zero = Twist::Zero();
      const auto e = wrt_i ? pair_residual(rec, g_i, g_j, Twist(xi), zero, k)
                           : pair_residual(rec, g_i, g_j, zero, Twist(xi), k);
      return *e;
    };
    return {wrt_i ? rj->d_xi_i : rj->d_xi_j, numeric_jacobian(f, VectorXd::Zero(6))};
  }
}

Check check_backward_solve(Rng& rng) {
  const int n = 6;
  MatrixXd a(n, n);
  for (double& v : a.reshaped()) v = uniform(rng, -1.0, 1.0);
  const MatrixXd h = a * a.transpose() + MatrixXd::Identity(n, n);
  VectorXd rhs(n), c(n);
  for (int i = 0; i < n; ++i) {
    rhs[i] = uniform(rng, -1.0, 1.0);
    c[i] = uniform(rng, -1.0, 1.0);
  }
  const VectorXd xi = h.partialPivLu().solve(rhs);
  const SolveGradients g = backward_solve(h, xi, c);

  // Parameters: H entries column-major, then rhs. L = c . H^-1 rhs.
  VectorXd params(n * n + n);
  params << h.reshaped(), rhs;
  auto loss = [&](const VectorXd& p) -> VectorXd {
    const MatrixXd hp = p.head(n * n).reshaped(n, n);
    return VectorXd::Constant(1, c.dot(hp.partialPivLu().solve(VectorXd(p.tail(n)))));
  };
  VectorXd analytic(n * n + n);
  analytic << g.d_h.reshaped(), g.d_rhs;
  return {analytic.transpose(), numeric_jacobian(loss, params)};
}

const std::map<std::string, Trial>& families() {
  static const std::map<std::string, Trial> table = {
      {"lie.action_jacobian", check_action},
      {"camera.projection_jacobian", check_projection},
      {"sampler.bilinear_gradient", check_sampler},
      {"costvol.soft_argmax", check_soft_argmax},
      {"costvol.cell_pose_jacobian", check_cell_pose},
      {"motion.residual_xi_i", [](Rng& r) { return check_residual(r, true); }},
      {"motion.residual_xi_j", [](Rng& r) { return check_residual(r, false); }},
      {"motion.backward_solve", check_backward_solve},
  };
  return table;
}

bool selected(const std::string& family, const std::vector<std::string>& filters) {
  if (filters.empty()) return true;
  for (const auto& f : filters) {
    if (family == f) return true;
    if (family.size() > f.size() && family.compare(0, f.size(), f) == 0 &&
        family[f.size()] == '.') {
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::string> gradient_families() {
  std::vector<std::string> out;
  for (const auto& [name, trial] : families()) out.push_back(name);
  return out;
}

std::vector<GradientCheckResult> run_gradient_checks(const GradientCheckOptions& options) {
  if (options.trials < 1) throw Error(ErrorCode::kInvalidParams, "trials must be positive");
  if (!options.inject_fault.empty() && !families().count(options.inject_fault)) {
    throw Error(ErrorCode::kInvalidParams, "unknown family '" + options.inject_fault + "'");
  }
  std::vector<GradientCheckResult> out;
  uint64_t stream = 0;
  for (const auto& [name, trial] : families()) {
    ++stream;
    if (!selected(name, options.families)) continue;
    Rng rng(options.seed * 1000003u + stream);
    GradientCheckResult res{name, 0.0, options.trials};
    for (int t = 0; t < options.trials; ++t) {
      Check c = trial(rng);
      if (name == options.inject_fault) c.analytic = -c.analytic;
      res.max_rel_error = std::max(res.max_rel_error, relative_error(c.analytic, c.numeric));
    }
    out.push_back(res);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidParams, "no gradient family matches the filter");
  return out;
}

}  // namespace mvdepth
