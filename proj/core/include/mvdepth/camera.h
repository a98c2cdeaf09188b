#pragma once

#include <optional>

#include <Eigen/Core>

#include "mvdepth/lie.h"

namespace mvdepth {

// Points with Z at or below this are treated as behind the camera.
inline constexpr double kMinDepth = 1e-6;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws kInvalidParams unless fx, fy > 0 and the principal point lies
  // inside the image.
  void validate() const;
  bool operator==(const Intrinsics&) const = default;
};

// Continuous image coordinates; pixel centers sit at integer (u, v).
struct Pixel {
  double u = 0.0;
  double v = 0.0;

  bool in_bounds(const Intrinsics& k) const {
    return u >= 0.0 && v >= 0.0 && u <= k.width - 1 && v <= k.height - 1;
  }
  Vec2 vec() const { return {u, v}; }
  bool operator==(const Pixel&) const = default;
};

Pixel project(const Intrinsics& k, const Vec3& x);
Pixel project(const Intrinsics& k, const Eigen::Vector4d& x_h);
std::optional<Pixel> try_project(const Intrinsics& k, const Vec3& x);

Vec3 backproject(const Intrinsics& k, const Pixel& x, double z);
Eigen::Vector4d backproject_homogeneous(const Intrinsics& k, const Pixel& x, double z);

// pi(g_ij * pi^-1(x, z)). Computed as x plus a displacement so that an
// identity transform returns x bit-exactly.
Pixel reproject(const Intrinsics& k, const Pose& g_ij, const Pixel& x, double z);

// Non-throwing variant; on success optionally reports the transformed point.
std::optional<Pixel> try_reproject(const Intrinsics& k, const Pose& g_ij,
                                   const Pixel& x, double z,
                                   Vec3* transformed = nullptr);

Mat23 projection_jacobian(const Intrinsics& k, const Vec3& x);

}  // namespace mvdepth
