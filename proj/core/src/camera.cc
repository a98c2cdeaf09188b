#include "mvdepth/camera.h"

#include <cmath>
#include <string>

#include "mvdepth/error.h"

namespace mvdepth {
namespace {

void require_front(double z) {
  if (!(z > kMinDepth)) {
    throw Error(ErrorCode::kNonPositiveDepth, "point depth " + std::to_string(z));
  }
}

}  // namespace

void Intrinsics::validate() const {
  const bool ok = fx > 0.0 && fy > 0.0 && width > 0 && height > 0 &&
                  cx >= 0.0 && cx < width && cy >= 0.0 && cy < height &&
                  std::isfinite(fx) && std::isfinite(fy);
  if (!ok) {
    throw Error(ErrorCode::kInvalidParams, "intrinsics out of range");
  }
}

std::optional<Pixel> try_project(const Intrinsics& k, const Vec3& x) {
  if (!(x.z() > kMinDepth)) return std::nullopt;
  return Pixel{k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy};
}

Pixel project(const Intrinsics& k, const Vec3& x) {
  require_front(x.z());
  return *try_project(k, x);
}

Pixel project(const Intrinsics& k, const Eigen::Vector4d& x_h) {
  return project(k, Vec3(x_h.head<3>() / x_h.w()));
}

Vec3 backproject(const Intrinsics& k, const Pixel& x, double z) {
  if (!(z > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "backproject depth " + std::to_string(z));
  }
  return {z * (x.u - k.cx) / k.fx, z * (x.v - k.cy) / k.fy, z};
}

Eigen::Vector4d backproject_homogeneous(const Intrinsics& k, const Pixel& x, double z) {
  const Vec3 p = backproject(k, x, z);
  return {p.x(), p.y(), p.z(), 1.0};
}

std::optional<Pixel> try_reproject(const Intrinsics& k, const Pose& g_ij,
                                   const Pixel& x, double z, Vec3* transformed) {
  if (!(z > 0.0)) return std::nullopt;
  const Vec3 ray((x.u - k.cx) / k.fx, (x.v - k.cy) / k.fy, 1.0);
  // Transformed point scaled by 1/z.
  const Vec3 q = g_ij.rotation() * ray + g_ij.translation() / z;
  if (!(z * q.z() > kMinDepth)) return std::nullopt;
  if (transformed) *transformed = z * q;
  return Pixel{x.u + k.fx * (q.x() / q.z() - ray.x()),
               x.v + k.fy * (q.y() / q.z() - ray.y())};
}

Pixel reproject(const Intrinsics& k, const Pose& g_ij, const Pixel& x, double z) {
  if (!(z > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "reproject depth " + std::to_string(z));
  }
  auto p = try_reproject(k, g_ij, x, z);
  if (!p) {
    throw Error(ErrorCode::kNonPositiveDepth, "transformed point behind camera");
  }
  return *p;
}

Mat23 projection_jacobian(const Intrinsics& k, const Vec3& x) {
  require_front(x.z());
  const double iz = 1.0 / x.z();
  Mat23 j;
  j << k.fx * iz, 0.0, -k.fx * x.x() * iz * iz,
       0.0, k.fy * iz, -k.fy * x.y() * iz * iz;
  return j;
}

}  // namespace mvdepth
