#include "mvdepth/costvol.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvdepth/parallel.h"
#include "mvdepth/sampler.h"

namespace mvdepth {

DepthHypotheses::DepthHypotheses(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty() || !(values_.front() > 0.0)) {
    throw Error(ErrorCode::kInvalidRange, "hypotheses must be nonempty and positive");
  }
  for (size_t i = 1; i < values_.size(); ++i) {
    if (!(values_[i] > values_[i - 1])) {
      throw Error(ErrorCode::kInvalidRange, "hypotheses must be strictly increasing");
    }
  }
}

double DepthHypotheses::local_spacing(double z) const {
  if (values_.size() < 2) return 0.0;
  auto it = std::upper_bound(values_.begin(), values_.end(), z);
  size_t hi = static_cast<size_t>(it - values_.begin());
  hi = std::clamp<size_t>(hi, 1, values_.size() - 1);
  return values_[hi] - values_[hi - 1];
}

int DepthHypotheses::nearest(double z) const {
  int best = 0;
  for (int k = 1; k < count(); ++k) {
    if (std::abs(values_[k] - z) < std::abs(values_[best] - z)) best = k;
  }
  return best;
}

DepthHypotheses depth_hypotheses(double z_min, double z_max, int count,
                                 DepthSpacing spacing) {
  if (!(z_min > 0.0) || !(z_max > z_min) || count < 2) {
    throw Error(ErrorCode::kInvalidRange,
                "need 0 < z_min < z_max and count >= 2 (got " + std::to_string(z_min) +
                    ", " + std::to_string(z_max) + ", " + std::to_string(count) + ")");
  }
  std::vector<double> z(count);
  const double last = count - 1;
  for (int k = 0; k < count; ++k) {
    const double t = k / last;
    if (spacing == DepthSpacing::kLinear) {
      z[k] = z_min + t * (z_max - z_min);
    } else {
      z[k] = 1.0 / (1.0 / z_min + t * (1.0 / z_max - 1.0 / z_min));
    }
  }
  z.front() = z_min;
  z.back() = z_max;
  return DepthHypotheses(std::move(z));
}

CostVolume::CostVolume(int height, int width, int depth, int channels)
    : height_(height), width_(width), depth_(depth), channels_(channels),
      data_(static_cast<size_t>(height) * width * depth * 2 * channels, 0.0),
      valid_(static_cast<size_t>(height) * width * depth, 0) {}

MatchVolume::MatchVolume(int height, int width, int depth)
    : height_(height), width_(width), depth_(depth),
      scores_(static_cast<size_t>(height) * width * depth, kInvalidScore),
      valid_(static_cast<size_t>(height) * width * depth, 0) {}

void MatchVolume::set(int y, int x, int k, double s) {
  scores_[index(y, x, k)] = s;
  valid_[index(y, x, k)] = 1;
}

void MatchVolume::invalidate(int y, int x, int k) {
  scores_[index(y, x, k)] = kInvalidScore;
  valid_[index(y, x, k)] = 0;
}

CostVolume build_cost_volume(const FeatureMap& f_keyframe, const FeatureMap& f_j,
                             const Intrinsics& k, const Pose& g_1j,
                             const DepthHypotheses& hyp) {
  if (!f_keyframe.same_shape(f_j)) {
    throw Error(ErrorCode::kDimensionMismatch, "cost volume feature maps differ in shape");
  }
  const int h = f_j.height(), w = f_j.width(), c = f_j.channels(), d = hyp.count();
  CostVolume vol(h, w, d, c);
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const auto key = f_keyframe.pixel(y, x);
      for (int kk = 0; kk < d; ++kk) {
        auto cell = vol.cell(y, x, kk);
        const auto p = try_reproject(k, g_1j, Pixel{double(x), double(y)}, hyp[kk]);
        if (!p) continue;
        if (!sample_into(f_j, p->u, p->v, cell.first(c))) continue;
        std::copy(key.begin(), key.end(), cell.begin() + c);
        vol.set_valid(y, x, kk, true);
      }
    }
  });
  return vol;
}

std::optional<Eigen::MatrixXd> cost_cell_pose_jacobian(const FeatureMap& f_j,
                                                       const Intrinsics& k,
                                                       const Pose& g_1j,
                                                       const Pixel& x, double z) {
  Vec3 q;
  const auto p = try_reproject(k, g_1j, x, z, &q);
  if (!p) return std::nullopt;
  const int c = f_j.channels();
  std::vector<double> value(c), gu(c), gv(c);
  if (!sample_into(f_j, p->u, p->v, value, gu, gv)) return std::nullopt;
  Eigen::MatrixXd dfdx(c, 2);
  for (int ch = 0; ch < c; ++ch) {
    dfdx(ch, 0) = gu[ch];
    dfdx(ch, 1) = gv[ch];
  }
  return Eigen::MatrixXd(dfdx * projection_jacobian(k, q) * action_jacobian(q));
}

double negated_mse(std::span<const double> sampled, std::span<const double> key) {
  double acc = 0.0;
  for (size_t i = 0; i < sampled.size(); ++i) {
    const double d = sampled[i] - key[i];
    acc += d * d;
  }
  return -acc / static_cast<double>(sampled.size());
}

MatchVolume match_scores(const CostVolume& vol, const MatchScorer& scorer) {
  const int h = vol.height(), w = vol.width(), d = vol.depth(), c = vol.channels();
  MatchVolume out(h, w, d);
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      for (int kk = 0; kk < d; ++kk) {
        if (!vol.valid(y, x, kk)) continue;
        const auto cell = vol.cell(y, x, kk);
        out.set(y, x, kk, scorer(cell.first(c), cell.subspan(c)));
      }
    }
  });
  return out;
}

MatchVolume view_pool(std::span<const MatchVolume> volumes) {
  if (volumes.empty()) throw Error(ErrorCode::kEmptyInput, "view_pool needs at least one volume");
  const MatchVolume& first = volumes.front();
  for (const auto& v : volumes) {
    if (!v.same_shape(first)) {
      throw Error(ErrorCode::kDimensionMismatch, "view_pool volumes differ in shape");
    }
  }
  const int h = first.height(), w = first.width(), d = first.depth();
  MatchVolume out(h, w, d);
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      for (int kk = 0; kk < d; ++kk) {
        double sum = 0.0;
        int n = 0;
        for (const auto& v : volumes) {
          if (!v.valid(y, x, kk)) continue;
          sum += v.score(y, x, kk);
          ++n;
        }
        if (n > 0) out.set(y, x, kk, sum / n);
      }
    }
  });
  return out;
}

std::optional<double> soft_argmax(std::span<const double> scores,
                                  std::span<const double> depths, double temperature,
                                  std::span<double> weights) {
  double peak = kInvalidScore;
  for (double s : scores) {
    if (std::isfinite(s)) peak = std::max(peak, s);
  }
  std::fill(weights.begin(), weights.end(), 0.0);
  if (!std::isfinite(peak)) return std::nullopt;

  double total = 0.0;
  for (size_t k = 0; k < scores.size(); ++k) {
    if (!std::isfinite(scores[k])) continue;
    weights[k] = std::exp((scores[k] - peak) / temperature);
    total += weights[k];
  }
  double depth = 0.0;
  for (size_t k = 0; k < scores.size(); ++k) {
    weights[k] /= total;
    depth += weights[k] * depths[k];
  }
  return depth;
}

std::vector<double> soft_argmax_gradient(std::span<const double> scores,
                                         std::span<const double> depths,
                                         double temperature) {
  std::vector<double> p(scores.size()), grad(scores.size(), 0.0);
  const auto depth = soft_argmax(scores, depths, temperature, p);
  if (!depth) return grad;
  for (size_t k = 0; k < scores.size(); ++k) {
    grad[k] = p[k] * (depths[k] - *depth) / temperature;
  }
  return grad;
}

DepthMap soft_argmax_depth(const MatchVolume& m, const DepthHypotheses& hyp,
                           double temperature) {
  if (m.depth() != hyp.count()) {
    throw Error(ErrorCode::kDimensionMismatch, "match volume depth vs hypothesis count");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "softmax temperature must be positive");
  }
  DepthMap out(m.height(), m.width());
  parallel_for(0, m.height(), [&](int y) {
    std::vector<double> weights(m.depth());
    for (int x = 0; x < m.width(); ++x) {
      const auto z = soft_argmax(m.pixel_scores(y, x), hyp.values(), temperature, weights);
      if (z) out.set(y, x, *z);
    }
  });
  return out;
}

DepthMap estimate_depth(std::span<const FeatureMap> features,
                        std::span<const Pose> poses, int reference,
                        const Intrinsics& k, const DepthHypotheses& hyp,
                        const SweepOptions& options) {
  if (features.size() != poses.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one pose per feature map required");
  }
  if (features.size() < 2) {
    throw Error(ErrorCode::kInsufficientFrames, "plane sweep needs at least two views");
  }
  const Pose ref_inv = poses[reference].inverse();
  std::vector<MatchVolume> volumes;
  volumes.reserve(features.size() - 1);
  for (size_t j = 0; j < features.size(); ++j) {
    if (static_cast<int>(j) == reference) continue;
    const CostVolume vol =
        build_cost_volume(features[reference], features[j], k, poses[j] * ref_inv, hyp);
    volumes.push_back(match_scores(vol, options.scorer));
  }
  return soft_argmax_depth(view_pool(volumes), hyp, options.temperature);
}

}  // namespace mvdepth
