#include "mvdepth/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Dense>

namespace mvdepth {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

bool joint(const DepthMap& a, const DepthMap& b, size_t i) {
  return a.valid_at(i) && b.valid_at(i);
}

void require_pair(const DepthMap& z, const DepthMap& z_star, const char* what) {
  require_same_size(z.height(), z.width(), z_star.height(), z_star.width(), what);
}

}  // namespace

double depth_loss(const DepthMap& z, const DepthMap& z_star, double w_s) {
  require_pair(z, z_star, "depth_loss");
  const int h = z.height(), w = z.width();
  double data = 0.0, smooth = 0.0;
  size_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      if (!joint(z, z_star, i)) continue;
      ++n;
      data += std::abs(z.at(i) - z_star.at(i));
      if (x + 1 < w && joint(z, z_star, i + 1)) smooth += std::abs(z.at(i + 1) - z.at(i));
      if (y + 1 < h && joint(z, z_star, i + w)) smooth += std::abs(z.at(i + w) - z.at(i));
    }
  }
  if (n == 0) throw Error(ErrorCode::kNoValidPixels, "depth_loss has no jointly valid pixels");
  return data + w_s * smooth;
}

std::vector<double> depth_loss_gradient(const DepthMap& z, const DepthMap& z_star,
                                        double w_s) {
  require_pair(z, z_star, "depth_loss_gradient");
  const int h = z.height(), w = z.width();
  std::vector<double> g(z.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      if (!joint(z, z_star, i)) continue;
      g[i] += sign(z.at(i) - z_star.at(i));
      if (x + 1 < w && joint(z, z_star, i + 1)) {
        const double s = w_s * sign(z.at(i + 1) - z.at(i));
        g[i + 1] += s;
        g[i] -= s;
      }
      if (y + 1 < h && joint(z, z_star, i + w)) {
        const double s = w_s * sign(z.at(i + w) - z.at(i));
        g[i + w] += s;
        g[i] -= s;
      }
    }
  }
  return g;
}

double huber(double a, double delta) {
  return a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
}

double motion_loss(const Pose& g, const Pose& g_star, const DepthMap& z,
                   const Intrinsics& k) {
  double total = 0.0;
  size_t n = 0;
  for (int y = 0; y < z.height(); ++y) {
    for (int x = 0; x < z.width(); ++x) {
      if (!z.valid(y, x)) continue;
      const Vec3 p = backproject(k, Pixel{double(x), double(y)}, z(y, x));
      const auto a = try_project(k, g.act(p));
      const auto b = try_project(k, g_star.act(p));
      if (!a || !b) continue;
      total += huber((a->vec() - b->vec()).norm());
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::kNoValidPixels, "motion_loss has no valid pixels");
  return total;
}

ScaleMatch scale_match(const DepthMap& z, const DepthMap& z_star) {
  require_pair(z, z_star, "scale_match");
  std::vector<double> ratios;
  for (size_t i = 0; i < z.size(); ++i) {
    if (joint(z, z_star, i)) ratios.push_back(z_star.at(i) / z.at(i));
  }
  if (ratios.empty()) throw Error(ErrorCode::kNoValidPixels, "scale_match has no jointly valid pixels");
  std::sort(ratios.begin(), ratios.end());
  const size_t m = ratios.size() / 2;
  const double s = ratios.size() % 2 ? ratios[m] : 0.5 * (ratios[m - 1] + ratios[m]);

  ScaleMatch out{s, DepthMap(z.height(), z.width())};
  for (size_t i = 0; i < z.size(); ++i) {
    if (z.valid_at(i)) out.scaled.set_at(i, s * z.at(i));
  }
  return out;
}

MetricReport depth_metrics(const DepthMap& z, const DepthMap& z_star) {
  require_pair(z, z_star, "depth_metrics");
  MetricReport m;
  double sum_d = 0.0, sum_d2 = 0.0, sq = 0.0;
  size_t d1 = 0, d2 = 0, d3 = 0;
  for (size_t i = 0; i < z.size(); ++i) {
    if (!joint(z, z_star, i)) continue;
    const double p = z.at(i), t = z_star.at(i);
    const double diff = p - t;
    const double d = std::log(p) - std::log(t);
    m.abs_rel += std::abs(diff) / t;
    m.sq_rel += diff * diff / t;
    sq += diff * diff;
    m.log10 += std::abs(std::log10(p) - std::log10(t));
    sum_d += d;
    sum_d2 += d * d;
    const double ratio = std::max(p / t, t / p);
    if (ratio < 1.25) ++d1;
    if (ratio < 1.25 * 1.25) ++d2;
    if (ratio < 1.25 * 1.25 * 1.25) ++d3;
    ++m.pixels;
  }
  if (m.pixels == 0) throw Error(ErrorCode::kNoValidPixels, "depth_metrics has no jointly valid pixels");
  const double n = static_cast<double>(m.pixels);
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(sum_d2 / n);
  m.log10 /= n;
  const double mean_d = sum_d / n;
  m.sc_inv = std::sqrt(std::max(0.0, sum_d2 / n - mean_d * mean_d));
  m.delta1 = d1 / n;
  m.delta2 = d2 / n;
  m.delta3 = d3 / n;
  return m;
}

namespace {

template <typename Fn>
void for_each_metric(const MetricReport& m, Fn&& fn) {
  fn("abs_rel", m.abs_rel);
  fn("sq_rel", m.sq_rel);
  fn("rmse", m.rmse);
  fn("rmse_log", m.rmse_log);
  fn("log10", m.log10);
  fn("sc_inv", m.sc_inv);
  fn("delta1", m.delta1);
  fn("delta2", m.delta2);
  fn("delta3", m.delta3);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string format_metric_rows(const MetricReport& m) {
  std::string out;
  for_each_metric(m, [&](const char* name, double v) {
    out += name;
    out += '\t';
    out += fmt(v);
    out += '\n';
  });
  return out;
}

std::string format_metric_block(const MetricReport& m) {
  std::string out;
  for_each_metric(m, [&](const char* name, double v) {
    out += name;
    out += " = ";
    out += fmt(v);
    out += '\n';
  });
  return out;
}

PoseError pose_metrics(const Pose& g, const Pose& g_star) {
  PoseError e;
  // Row dot products make R R*^T exactly symmetric when R == R*, so
  // identical rotations report exactly zero.
  Mat3 rel;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rel(i, j) = g.rotation().row(i).dot(g_star.rotation().row(j));
  e.rot_deg = log_so3(rel).norm() * 180.0 / M_PI;
  const Vec3& t = g.translation();
  const Vec3& ts = g_star.translation();
  if (t.norm() >= 1e-9 && ts.norm() >= 1e-9) {
    // atan2 form keeps precision for nearly parallel vectors.
    e.trans_dir_deg = std::atan2(t.cross(ts).norm(), t.dot(ts)) * 180.0 / M_PI;
  }
  e.trans_cm = (t - ts).norm() * 100.0;
  return e;
}

double trajectory_rmse(const Trajectory& estimated, const Trajectory& reference,
                       double window, double tolerance) {
  struct Match {
    double t;
    Pose est;
    Pose ref;
  };
  Trajectory ref = reference;
  std::sort(ref.begin(), ref.end(),
            [](const StampedPose& a, const StampedPose& b) { return a.timestamp < b.timestamp; });
  Trajectory est = estimated;
  std::sort(est.begin(), est.end(),
            [](const StampedPose& a, const StampedPose& b) { return a.timestamp < b.timestamp; });

  std::vector<Match> matches;
  for (const auto& e : est) {
    auto it = std::lower_bound(ref.begin(), ref.end(), e.timestamp,
                               [](const StampedPose& r, double t) { return r.timestamp < t; });
    const StampedPose* best = nullptr;
    if (it != ref.end()) best = &*it;
    if (it != ref.begin()) {
      const StampedPose* prev = &*(it - 1);
      if (!best || std::abs(prev->timestamp - e.timestamp) <= std::abs(best->timestamp - e.timestamp)) {
        best = prev;
      }
    }
    if (best && std::abs(best->timestamp - e.timestamp) <= tolerance) {
      matches.push_back({e.timestamp, e.pose, best->pose});
    }
  }
  if (matches.size() < 2) {
    throw Error(ErrorCode::kNoAssociations,
                std::to_string(matches.size()) + " associated poses (need 2)");
  }

  double sum_sq = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < matches.size(); ++i) {
    size_t best = matches.size();
    double best_gap = tolerance;
    for (size_t j = i + 1; j < matches.size(); ++j) {
      const double gap = std::abs(matches[j].t - matches[i].t - window);
      if (gap <= best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    if (best == matches.size()) continue;
    const Match& a = matches[i];
    const Match& b = matches[best];
    const Pose rel_ref = a.ref.inverse() * b.ref;
    const Pose rel_est = a.est.inverse() * b.est;
    const Pose err = rel_ref.inverse() * rel_est;
    const double drift = err.translation().norm() / (b.t - a.t);
    sum_sq += drift * drift;
    ++count;
  }
  if (count == 0) {
    throw Error(ErrorCode::kNoAssociations, "no pose pairs one window apart");
  }
  return std::sqrt(sum_sq / count);
}

}  // namespace mvdepth
