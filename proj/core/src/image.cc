#include "mvdepth/image.h"

#include <algorithm>
#include <cmath>

namespace mvdepth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kCheiralityViolation: return "CheiralityViolation";
    case ErrorCode::kInsufficientConstraints: return "InsufficientConstraints";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kNoValidPixels: return "NoValidPixels";
    case ErrorCode::kNoAssociations: return "NoAssociations";
    case ErrorCode::kInsufficientFrames: return "InsufficientFrames";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kNonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

size_t Mask::count() const {
  return static_cast<size_t>(
      std::count_if(data_.begin(), data_.end(), [](uint8_t v) { return v != 0; }));
}

FeatureMap::FeatureMap(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || channels < 1) {
    throw Error(ErrorCode::kInvalidParams, "feature map needs positive H, W and C >= 1");
  }
  data_.assign(static_cast<size_t>(height) * width * channels, fill);
}

DepthMap DepthMap::constant(int height, int width, double z) {
  DepthMap d(height, width);
  for (size_t i = 0; i < d.size(); ++i) d.set_at(i, z);
  return d;
}

void DepthMap::set(int y, int x, double z) { set_at(index(y, x), z); }

void DepthMap::set_at(size_t i, double z) {
  const bool ok = std::isfinite(z) && z > 0.0;
  values_[i] = ok ? z : 0.0;
  valid_.set_at(i, ok);
}

void DepthMap::invalidate(int y, int x) {
  values_[index(y, x)] = 0.0;
  valid_.set(y, x, false);
}

}  // namespace mvdepth
