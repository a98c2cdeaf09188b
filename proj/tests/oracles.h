#pragma once

// Straightforward reference implementations used to cross-check the library.
// They share no code with it beyond the data types.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Geometry>

#include "mvdepth/image.h"
#include "mvdepth/metrics.h"

namespace mvdepth::oracle {

inline MetricReport depth_metrics(const DepthMap& z, const DepthMap& gt) {
  std::vector<double> a, b;
  for (int y = 0; y < z.height(); ++y)
    for (int x = 0; x < z.width(); ++x)
      if (z.valid(y, x) && gt.valid(y, x)) {
        a.push_back(z(y, x));
        b.push_back(gt(y, x));
      }
  const double n = static_cast<double>(a.size());
  MetricReport m;
  double se = 0, sl = 0, d1 = 0, d2 = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    const double dl = std::log(a[i]) - std::log(b[i]);
    m.abs_rel += std::fabs(diff) / b[i];
    m.sq_rel += diff * diff / b[i];
    se += diff * diff;
    sl += dl * dl;
    m.log10 += std::fabs(std::log10(a[i]) - std::log10(b[i]));
    d1 += dl;
    d2 += dl * dl;
    const double ratio = std::max(a[i] / b[i], b[i] / a[i]);
    m.delta1 += ratio < 1.25;
    m.delta2 += ratio < 1.25 * 1.25;
    m.delta3 += ratio < 1.25 * 1.25 * 1.25;
  }
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(se / n);
  m.rmse_log = std::sqrt(sl / n);
  m.log10 /= n;
  const double mean = d1 / n;
  m.sc_inv = std::sqrt(std::max(0.0, d2 / n - mean * mean));
  m.delta1 /= n;
  m.delta2 /= n;
  m.delta3 /= n;
  m.pixels = a.size();
  return m;
}

inline Eigen::Isometry3d isometry(const Pose& g) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = g.rotation();
  t.translation() = g.translation();
  return t;
}

inline PoseError pose_metrics(const Pose& g, const Pose& g_star) {
  PoseError e;
  const Eigen::AngleAxisd aa(Eigen::Matrix3d(g.rotation() * g_star.rotation().transpose()));
  e.rot_deg = std::fabs(aa.angle()) * 180.0 / std::numbers::pi;
  const Vec3 t = g.translation(), ts = g_star.translation();
  if (t.norm() >= 1e-9 && ts.norm() >= 1e-9) {
    const double c = std::clamp(t.dot(ts) / (t.norm() * ts.norm()), -1.0, 1.0);
    e.trans_dir_deg = std::acos(c) * 180.0 / std::numbers::pi;
  }
  e.trans_cm = (t - ts).norm() * 100.0;
  return e;
}

// Nearest-timestamp association, then every pair of matches whose time gap is
// within `tolerance` of `window`; the latest such partner wins.
inline double trajectory_rmse(const Trajectory& est, const Trajectory& ref, double window,
                              double tolerance) {
  struct M {
    double t;
    Eigen::Isometry3d e, r;
  };
  std::vector<M> ms;
  for (const auto& e : est) {
    const StampedPose* best = nullptr;
    for (const auto& r : ref) {
      const double d = std::fabs(r.timestamp - e.timestamp);
      if (d > tolerance) continue;
      if (!best || d < std::fabs(best->timestamp - e.timestamp) ||
          (d == std::fabs(best->timestamp - e.timestamp) && r.timestamp < best->timestamp)) {
        best = &r;
      }
    }
    if (best) ms.push_back({e.timestamp, isometry(e.pose), isometry(best->pose)});
  }
  std::sort(ms.begin(), ms.end(), [](const M& a, const M& b) { return a.t < b.t; });
  double sum = 0;
  int count = 0;
  for (size_t i = 0; i < ms.size(); ++i) {
    int partner = -1;
    for (size_t j = i + 1; j < ms.size(); ++j)
      if (std::fabs(ms[j].t - ms[i].t - window) <= tolerance &&
          (partner < 0 || std::fabs(ms[j].t - ms[i].t - window) <=
                              std::fabs(ms[partner].t - ms[i].t - window))) {
        partner = static_cast<int>(j);
      }
    if (partner < 0) continue;
    const M& a = ms[i];
    const M& b = ms[partner];
    const Eigen::Isometry3d err = (a.r.inverse() * b.r).inverse() * (a.e.inverse() * b.e);
    const double drift = err.translation().norm() / (b.t - a.t);
    sum += drift * drift;
    ++count;
  }
  return std::sqrt(sum / count);
}

}  // namespace mvdepth::oracle
