#include "mvdepth/sampler.h"

#include <algorithm>
#include <cmath>

#include "mvdepth/parallel.h"

namespace mvdepth {

void interpolate_zero_padded(const FeatureMap& f, double u, double v,
                             std::span<double> out, std::span<double> grad_u,
                             std::span<double> grad_v) {
  const int c = f.channels();
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const double a = u - fu;
  const double b = v - fv;
  const int x0 = static_cast<int>(fu);
  const int y0 = static_cast<int>(fv);
  const int x1 = x0 + 1;
  const int y1 = y0 + 1;

  auto inside = [&](int y, int x) {
    return x >= 0 && y >= 0 && x < f.width() && y < f.height();
  };
  const bool in00 = inside(y0, x0), in01 = inside(y0, x1);
  const bool in10 = inside(y1, x0), in11 = inside(y1, x1);

  const bool want_grad = !grad_u.empty();
  for (int ch = 0; ch < c; ++ch) {
    const double f00 = in00 ? f(y0, x0, ch) : 0.0;
    const double f01 = in01 ? f(y0, x1, ch) : 0.0;
    const double f10 = in10 ? f(y1, x0, ch) : 0.0;
    const double f11 = in11 ? f(y1, x1, ch) : 0.0;
    out[ch] = (1.0 - b) * ((1.0 - a) * f00 + a * f01) +
              b * ((1.0 - a) * f10 + a * f11);
    if (want_grad) {
      grad_u[ch] = (1.0 - b) * (f01 - f00) + b * (f11 - f10);
      grad_v[ch] = (1.0 - a) * (f10 - f00) + a * (f11 - f01);
    }
  }
}

bool sample_into(const FeatureMap& f, double u, double v, std::span<double> out,
                 std::span<double> grad_u, std::span<double> grad_v) {
  const bool inside = std::isfinite(u) && std::isfinite(v) && u >= 0.0 &&
                      v >= 0.0 && u <= f.width() - 1 && v <= f.height() - 1;
  if (!inside) {
    std::fill(out.begin(), out.end(), 0.0);
    std::fill(grad_u.begin(), grad_u.end(), 0.0);
    std::fill(grad_v.begin(), grad_v.end(), 0.0);
    return false;
  }
  interpolate_zero_padded(f, u, v, out, grad_u, grad_v);
  return true;
}

SampleResult bilinear_sample(const FeatureMap& f, const Pixel& x) {
  const int c = f.channels();
  SampleResult r;
  r.values = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd gu = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd gv = Eigen::VectorXd::Zero(c);
  r.valid = sample_into(f, x.u, x.v, {r.values.data(), static_cast<size_t>(c)},
                        {gu.data(), static_cast<size_t>(c)},
                        {gv.data(), static_cast<size_t>(c)});
  r.gradient.resize(c, 2);
  r.gradient.col(0) = gu;
  r.gradient.col(1) = gv;
  return r;
}

WarpResult warp_feature_map(const FeatureMap& f_j, const Intrinsics& k,
                            const Pose& g_ij, const DepthMap& z_i) {
  require_same_size(z_i.height(), z_i.width(), f_j.height(), f_j.width(),
                    "warp_feature_map depth vs features");
  const int h = f_j.height();
  const int w = f_j.width();
  WarpResult out{FeatureMap(h, w, f_j.channels()), Mask(h, w, false)};
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!z_i.valid(y, x)) continue;
      const auto p = try_reproject(k, g_ij, Pixel{double(x), double(y)}, z_i(y, x));
      if (!p) continue;
      if (sample_into(f_j, p->u, p->v, out.features.pixel(y, x))) {
        out.valid.set(y, x, true);
      }
    }
  });
  return out;
}

}  // namespace mvdepth
