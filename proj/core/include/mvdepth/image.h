#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvdepth/error.h"

namespace mvdepth {

// Row-major H x W boolean mask.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, bool value = false)
      : height_(height), width_(width),
        data_(static_cast<size_t>(height) * width, value ? 1 : 0) {}

  int height() const { return height_; }
  int width() const { return width_; }
  size_t size() const { return data_.size(); }

  bool operator()(int y, int x) const { return data_[index(y, x)] != 0; }
  void set(int y, int x, bool v) { data_[index(y, x)] = v ? 1 : 0; }
  bool at(size_t i) const { return data_[i] != 0; }
  void set_at(size_t i, bool v) { data_[i] = v ? 1 : 0; }

  size_t count() const;
  bool operator==(const Mask&) const = default;

 private:
  size_t index(int y, int x) const {
    return static_cast<size_t>(y) * width_ + x;
  }
  int height_ = 0;
  int width_ = 0;
  std::vector<uint8_t> data_;
};

// Dense H x W x C feature image, channels interleaved per pixel.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  double& operator()(int y, int x, int c) { return data_[index(y, x) + c]; }
  double operator()(int y, int x, int c) const { return data_[index(y, x) + c]; }

  std::span<double> pixel(int y, int x) {
    return {data_.data() + index(y, x), static_cast<size_t>(channels_)};
  }
  std::span<const double> pixel(int y, int x) const {
    return {data_.data() + index(y, x), static_cast<size_t>(channels_)};
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool same_shape(const FeatureMap& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  bool operator==(const FeatureMap&) const = default;

 private:
  size_t index(int y, int x) const {
    return (static_cast<size_t>(y) * width_ + x) * channels_;
  }
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Metric depth with validity. Valid entries are positive and finite.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int height, int width)
      : height_(height), width_(width),
        values_(static_cast<size_t>(height) * width, 0.0),
        valid_(height, width, false) {}

  static DepthMap constant(int height, int width, double z);

  int height() const { return height_; }
  int width() const { return width_; }
  size_t size() const { return values_.size(); }

  double operator()(int y, int x) const { return values_[index(y, x)]; }
  bool valid(int y, int x) const { return valid_(y, x); }
  double at(size_t i) const { return values_[i]; }
  bool valid_at(size_t i) const { return valid_.at(i); }

  // Stores z and marks the pixel valid iff z is positive and finite.
  void set(int y, int x, double z);
  void set_at(size_t i, double z);
  void invalidate(int y, int x);

  const Mask& mask() const { return valid_; }
  std::span<const double> values() const { return values_; }
  size_t valid_count() const { return valid_.count(); }

  bool operator==(const DepthMap&) const = default;

 private:
  size_t index(int y, int x) const {
    return static_cast<size_t>(y) * width_ + x;
  }
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
  Mask valid_;
};

inline void require_same_size(int h0, int w0, int h1, int w1, const char* what) {
  if (h0 != h1 || w0 != w1) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(h0) + "x" +
                    std::to_string(w0) + " vs " + std::to_string(h1) + "x" +
                    std::to_string(w1));
  }
}

}  // namespace mvdepth
