#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvdepth/camera.h"
#include "mvdepth/image.h"

namespace mvdepth {

enum class DepthSpacing { kLinear, kInverse };

// Strictly increasing positive depth hypotheses z_1 < ... < z_D.
class DepthHypotheses {
 public:
  explicit DepthHypotheses(std::vector<double> values);

  int count() const { return static_cast<int>(values_.size()); }
  double operator[](int k) const { return values_[k]; }
  std::span<const double> values() const { return values_; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }

  // Gap of the hypothesis interval containing z (edge gap outside the range).
  double local_spacing(double z) const;
  int nearest(double z) const;

 private:
  std::vector<double> values_;
};

// Endpoints are included exactly. Throws kInvalidRange.
DepthHypotheses depth_hypotheses(double z_min, double z_max, int count,
                                 DepthSpacing spacing);

// H x W x D cells of 2C values: sampled other-view features followed by the
// keyframe features.
class CostVolume {
 public:
  CostVolume(int height, int width, int depth, int channels);

  int height() const { return height_; }
  int width() const { return width_; }
  int depth() const { return depth_; }
  int channels() const { return channels_; }  // C, half the cell width

  std::span<double> cell(int y, int x, int k) {
    return {data_.data() + offset(y, x, k), static_cast<size_t>(2 * channels_)};
  }
  std::span<const double> cell(int y, int x, int k) const {
    return {data_.data() + offset(y, x, k), static_cast<size_t>(2 * channels_)};
  }
  bool valid(int y, int x, int k) const { return valid_[cell_index(y, x, k)] != 0; }
  void set_valid(int y, int x, int k, bool v) { valid_[cell_index(y, x, k)] = v ? 1 : 0; }

 private:
  size_t cell_index(int y, int x, int k) const {
    return (static_cast<size_t>(y) * width_ + x) * depth_ + k;
  }
  size_t offset(int y, int x, int k) const { return cell_index(y, x, k) * 2 * channels_; }

  int height_, width_, depth_, channels_;
  std::vector<double> data_;
  std::vector<uint8_t> valid_;
};

inline constexpr double kInvalidScore = -std::numeric_limits<double>::infinity();

// H x W x D pre-softmax scores. Invalid cells hold kInvalidScore.
class MatchVolume {
 public:
  MatchVolume() = default;
  MatchVolume(int height, int width, int depth);

  int height() const { return height_; }
  int width() const { return width_; }
  int depth() const { return depth_; }

  double score(int y, int x, int k) const { return scores_[index(y, x, k)]; }
  bool valid(int y, int x, int k) const { return valid_[index(y, x, k)] != 0; }
  void set(int y, int x, int k, double s);
  void invalidate(int y, int x, int k);

  std::span<const double> pixel_scores(int y, int x) const {
    return {scores_.data() + index(y, x, 0), static_cast<size_t>(depth_)};
  }
  std::span<const double> scores() const { return scores_; }
  bool same_shape(const MatchVolume& o) const {
    return height_ == o.height_ && width_ == o.width_ && depth_ == o.depth_;
  }

 private:
  size_t index(int y, int x, int k) const {
    return (static_cast<size_t>(y) * width_ + x) * depth_ + k;
  }
  int height_ = 0, width_ = 0, depth_ = 0;
  std::vector<double> scores_;
  std::vector<uint8_t> valid_;
};

CostVolume build_cost_volume(const FeatureMap& f_keyframe, const FeatureMap& f_j,
                             const Intrinsics& k, const Pose& g_1j,
                             const DepthHypotheses& hyp);

// d(sampled F_j at reproject(exp(xi) g_1j, x, z))/d xi at xi = 0, C x 6.
// Empty when the cell is invalid.
std::optional<Eigen::MatrixXd> cost_cell_pose_jacobian(const FeatureMap& f_j,
                                                       const Intrinsics& k,
                                                       const Pose& g_1j,
                                                       const Pixel& x, double z);

// Scores one cell from its two halves; larger is a better match.
using MatchScorer =
    std::function<double(std::span<const double> sampled, std::span<const double> key)>;

double negated_mse(std::span<const double> sampled, std::span<const double> key);

MatchVolume match_scores(const CostVolume& vol, const MatchScorer& scorer = negated_mse);

// Mean over inputs valid at each cell; validity is the union. Reduction runs
// over `volumes` in order.
MatchVolume view_pool(std::span<const MatchVolume> volumes);

// Softmax over the finite scores of one pixel, weights written to `weights`
// (zero for invalid cells). Returns the expected depth, or nullopt if no cell
// is valid.
std::optional<double> soft_argmax(std::span<const double> scores,
                                  std::span<const double> depths, double temperature,
                                  std::span<double> weights);

// d(expected depth)/d(scores); zero for invalid cells.
std::vector<double> soft_argmax_gradient(std::span<const double> scores,
                                         std::span<const double> depths,
                                         double temperature);

DepthMap soft_argmax_depth(const MatchVolume& m, const DepthHypotheses& hyp,
                           double temperature = 1.0);

// Plane sweep over every non-reference view followed by pooling and
// soft-argmax. poses are world-to-camera; the reference uses its own.
struct SweepOptions {
  double temperature = 1.0;
  MatchScorer scorer = negated_mse;
};
DepthMap estimate_depth(std::span<const FeatureMap> features,
                        std::span<const Pose> poses, int reference,
                        const Intrinsics& k, const DepthHypotheses& hyp,
                        const SweepOptions& options = {});

}  // namespace mvdepth
