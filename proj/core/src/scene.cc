#include "mvdepth/scene.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "mvdepth/parallel.h"

namespace mvdepth {

std::string to_string(TrajectoryShape shape) {
  switch (shape) {
    case TrajectoryShape::kStatic: return "static";
    case TrajectoryShape::kLine: return "line";
    case TrajectoryShape::kArc: return "arc";
  }
  return "line";
}

TrajectoryShape parse_trajectory_shape(const std::string& s) {
  if (s == "static") return TrajectoryShape::kStatic;
  if (s == "line") return TrajectoryShape::kLine;
  if (s == "arc") return TrajectoryShape::kArc;
  throw Error(ErrorCode::kInvalidParams, "unknown trajectory shape '" + s + "'");
}

void SceneParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidParams, what); };
  if (width < 8 || height < 8) fail("image must be at least 8x8");
  if (focal < 0.0) fail("focal must be positive (or 0 for default)");
  if (!(depth_min > 0.0) || !(depth_max > depth_min)) fail("need 0 < depth_min < depth_max");
  if (fronto_planes < 0 || tilted_planes < 0 || spheres < 0) fail("negative primitive count");
  if (!background && fronto_planes + tilted_planes + spheres == 0) fail("scene has no surfaces");
  if (frames < 1) fail("frames must be >= 1");
  if (frame_interval <= 0.0) fail("frame_interval must be positive");
  if (background_depth != 0.0 &&
      (background_depth < depth_min || background_depth > depth_max)) {
    fail("background_depth outside the depth range");
  }
}

Intrinsics SceneParams::intrinsics() const {
  const double f = focal > 0.0 ? focal : static_cast<double>(width);
  return Intrinsics{f, f, 0.5 * (width - 1), 0.5 * (height - 1), width, height};
}

double Texture::value(const Vec3& p) const {
  double v = base;
  for (const auto& w : waves) v += w.amplitude * std::sin(w.frequency.dot(p) + w.phase);
  return v;
}

Trajectory SyntheticScene::trajectory() const {
  Trajectory t;
  for (size_t i = 0; i < poses.size(); ++i) t.push_back({timestamps[i], poses[i].inverse()});
  return t;
}

namespace {

class SceneRng {
 public:
  explicit SceneRng(uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  Vec3 unit_vector() {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng_), n(rng_), n(rng_));
    return v.normalized();
  }

 private:
  std::mt19937_64 rng_;
};

Texture make_texture(SceneRng& rng, double pixel_size, const Vec3* axis_u,
                     const Vec3* axis_v) {
  Texture t;
  for (int n = 0; n < 6; ++n) {
    Vec3 dir;
    if (axis_u) {
      const double a = rng.uniform(0.0, M_PI);
      dir = std::cos(a) * *axis_u + std::sin(a) * *axis_v;
    } else {
      dir = rng.unit_vector();
    }
    const double cycles_per_pixel = rng.uniform(0.04, 0.16);
    Texture::Wave w;
    w.frequency = dir * (2.0 * M_PI * cycles_per_pixel / pixel_size);
    w.phase = rng.uniform(0.0, 2.0 * M_PI);
    w.amplitude = rng.uniform(8.0, 18.0);
    t.waves.push_back(w);
  }
  return t;
}

PlanePatch make_plane(SceneRng& rng, const Vec3& center, const Vec3& normal,
                      double half, double pixel_size) {
  PlanePatch p;
  p.center = center;
  p.normal = normal.normalized();
  const Vec3 helper = std::abs(p.normal.y()) < 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  p.axis_u = helper.cross(p.normal).normalized();
  p.axis_v = p.normal.cross(p.axis_u);
  p.half_u = half;
  p.half_v = half;
  p.texture = make_texture(rng, pixel_size, &p.axis_u, &p.axis_v);
  return p;
}

Mat3 yaw(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  return r;
}

}  // namespace

SyntheticScene generate_scene(const SceneParams& params) {
  params.validate();
  SyntheticScene scene;
  scene.params = params;
  scene.k = params.intrinsics();
  SceneRng rng(params.seed);
  const Intrinsics& k = scene.k;
  const double range = params.depth_max - params.depth_min;
  const double z_bg = params.background_depth > 0.0
                          ? params.background_depth
                          : params.depth_min + 0.85 * range;
  auto footprint = [&](double z) { return z * k.width / k.fx; };
  auto place = [&](double z) {
    const Pixel x{rng.uniform(0.2, 0.8) * (k.width - 1), rng.uniform(0.2, 0.8) * (k.height - 1)};
    return backproject(k, x, z);
  };

  const double near = params.depth_min + 0.1 * range;
  const double far = std::max(near + 1e-3, z_bg - 0.1 * range);
  for (int n = 0; n < params.fronto_planes; ++n) {
    const double z = rng.uniform(near, far);
    const Vec3 c = place(z);
    scene.planes.push_back(make_plane(rng, c, Vec3(0, 0, -1),
                                      rng.uniform(0.1, 0.25) * footprint(z), z / k.fx));
  }
  for (int n = 0; n < params.tilted_planes; ++n) {
    const double z = rng.uniform(near, far);
    const Vec3 c = place(z);
    const double tilt = rng.uniform(20.0, 50.0) * M_PI / 180.0;
    const double az = rng.uniform(0.0, 2.0 * M_PI);
    const Vec3 axis(std::cos(az), std::sin(az), 0.0);
    const Vec3 normal = exp_so3(axis * tilt) * Vec3(0, 0, -1);
    scene.planes.push_back(make_plane(rng, c, normal,
                                      rng.uniform(0.1, 0.2) * footprint(z), z / k.fx));
  }
  for (int n = 0; n < params.spheres; ++n) {
    const double z = rng.uniform(params.depth_min + 0.25 * range, far);
    Sphere s;
    s.center = place(z);
    s.radius = std::min(rng.uniform(0.06, 0.12) * footprint(z), 0.5 * (z - params.depth_min));
    s.texture = make_texture(rng, z / k.fx, nullptr, nullptr);
    scene.spheres.push_back(s);
  }
  if (params.background) {
    PlanePatch bg = make_plane(rng, Vec3(0, 0, z_bg), Vec3(0, 0, -1),
                               std::numeric_limits<double>::infinity(), z_bg / k.fx);
    scene.planes.push_back(bg);
  }

  // Trajectory (camera-to-world first, then inverted).
  Vec3 dir(1.0, rng.uniform(-0.2, 0.2), rng.uniform(-0.1, 0.1));
  dir.normalize();
  const Vec3 pivot(0.0, 0.0, 0.5 * (params.depth_min + z_bg));
  for (int i = 0; i < params.frames; ++i) {
    Pose c2w;
    switch (params.shape) {
      case TrajectoryShape::kStatic:
        break;
      case TrajectoryShape::kLine:
        c2w = Pose::from_translation(i * params.step * dir);
        break;
      case TrajectoryShape::kArc: {
        const Mat3 r = yaw(i * params.arc_step_deg * M_PI / 180.0);
        c2w = Pose(r, pivot - r * pivot);
        break;
      }
    }
    scene.poses.push_back(i == 0 ? Pose::identity() : c2w.inverse());
    scene.timestamps.push_back(i * params.frame_interval);
  }
  return scene;
}

std::optional<RayHit> cast_ray(const SyntheticScene& scene, const Pose& g, const Pixel& x) {
  const Intrinsics& k = scene.k;
  const Vec3 d_cam((x.u - k.cx) / k.fx, (x.v - k.cy) / k.fy, 1.0);
  const Mat3 rt = g.rotation().transpose();
  const Vec3 origin = -(rt * g.translation());
  const Vec3 dir = rt * d_cam;  // unit camera-Z per unit t
  const double lo = scene.params.depth_min, hi = scene.params.depth_max;

  double best = std::numeric_limits<double>::infinity();
  const Texture* tex = nullptr;
  for (const auto& p : scene.planes) {
    const double denom = p.normal.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double t = p.normal.dot(p.center - origin) / denom;
    if (t < lo || t > hi || t >= best) continue;
    const Vec3 rel = origin + t * dir - p.center;
    if (std::abs(rel.dot(p.axis_u)) > p.half_u || std::abs(rel.dot(p.axis_v)) > p.half_v) continue;
    best = t;
    tex = &p.texture;
  }
  for (const auto& s : scene.spheres) {
    const Vec3 oc = origin - s.center;
    const double a = dir.squaredNorm();
    const double b = oc.dot(dir);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - a * c;
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    for (double t : {(-b - sq) / a, (-b + sq) / a}) {
      if (t < lo || t > hi) continue;
      if (t < best) {
        best = t;
        tex = &s.texture;
      }
      break;
    }
  }
  if (!tex) return std::nullopt;
  return RayHit{best, tex->value(origin + best * dir)};
}

FeatureMap intensity_features(const FeatureMap& intensity) {
  const int h = intensity.height(), w = intensity.width();
  FeatureMap f(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      f(y, x, 0) = intensity(y, x, 0);
      f(y, x, 1) = (intensity(y, xr, 0) - intensity(y, xl, 0)) / (xr - xl);
      f(y, x, 2) = (intensity(yd, x, 0) - intensity(yu, x, 0)) / (yd - yu);
    }
  }
  return f;
}

RenderedView render_view(const SyntheticScene& scene, int frame) {
  if (frame < 0 || frame >= scene.frame_count()) {
    throw Error(ErrorCode::kIndexOutOfRange, "frame " + std::to_string(frame));
  }
  const int h = scene.k.height, w = scene.k.width;
  FeatureMap intensity(h, w, 1);
  DepthMap depth(h, w);
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const auto hit = cast_ray(scene, scene.poses[frame], Pixel{double(x), double(y)});
      if (!hit) continue;
      intensity(y, x, 0) = hit->intensity;
      depth.set(y, x, hit->depth);
    }
  });
  return {intensity_features(intensity), std::move(depth)};
}

ResidualFlowField oracle_flow(const SyntheticScene& scene, int i, int j,
                              const Pose& g_i, const Pose& g_j, const DepthMap& depth_i) {
  const int n = scene.frame_count();
  if (i < 0 || j < 0 || i >= n || j >= n) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "oracle frames " + std::to_string(i) + ", " + std::to_string(j));
  }
  const Intrinsics& k = scene.k;
  require_same_size(depth_i.height(), depth_i.width(), k.height, k.width, "oracle depth");
  const Pose true_ij = scene.poses[j] * scene.poses[i].inverse();
  const Pose est_ij = g_j * g_i.inverse();
  ResidualFlowField flow(k.height, k.width);
  parallel_for(0, k.height, [&](int y) {
    for (int x = 0; x < k.width; ++x) {
      if (!depth_i.valid(y, x)) continue;
      const Pixel px{double(x), double(y)};
      const auto hit = cast_ray(scene, scene.poses[i], px);
      if (!hit) continue;
      const Vec3 q_true = true_ij.act(backproject(k, px, hit->depth));
      const auto p_true = try_project(k, q_true);
      if (!p_true || !p_true->in_bounds(k)) continue;
      const auto seen = cast_ray(scene, scene.poses[j], *p_true);
      if (!seen || std::abs(seen->depth - q_true.z()) > 1e-6 * q_true.z()) continue;
      const auto p_est = try_project(k, est_ij.act(backproject(k, px, depth_i(y, x))));
      if (!p_est) continue;
      flow.set(y, x, p_true->vec() - p_est->vec(), Vec2::Constant(kOracleConfidence));
    }
  });
  return flow;
}

ResidualFlowField OracleFlowEstimator::estimate(const FlowRequest& request) const {
  return oracle_flow(scene_, request.frame_i, request.frame_j, request.g_i, request.g_j,
                     *request.depth_i);
}

Pose perturb_pose(const Pose& g, double max_rot_deg, double max_trans_m, uint64_t seed) {
  if (max_rot_deg < 0.0 || max_trans_m < 0.0) {
    throw Error(ErrorCode::kInvalidParams, "perturbation bounds must be nonnegative");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto ball = [&](double radius) -> Vec3 {
    if (radius == 0.0) return Vec3::Zero();
    Vec3 d(gauss(rng), gauss(rng), gauss(rng));
    d.normalize();
    return d * radius * std::cbrt(unit(rng));
  };
  const Vec3 phi = ball(max_rot_deg * M_PI / 180.0);
  const Vec3 delta = ball(max_trans_m);
  return {exp_so3(phi) * g.rotation(), g.translation() + delta};
}

}  // namespace mvdepth
