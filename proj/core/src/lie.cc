#include "mvdepth/lie.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace mvdepth {
namespace {

constexpr double kSmallAngle = 1e-8;

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

// Left Jacobian of SO(3); maps rho to the translation of exp(rho, phi).
Mat3 left_jacobian_so3(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  double b, c;
  if (theta < kSmallAngle) {
    b = 0.5 - theta * theta / 24.0;
    c = 1.0 / 6.0 - theta * theta / 120.0;
  } else {
    const double s = std::sin(0.5 * theta);
    b = 2.0 * s * s / (theta * theta);
    c = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Mat3::Identity() + b * k + c * k * k;
}

Mat3 inverse_left_jacobian_so3(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  double c;
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    const double a = std::sin(theta) / theta;
    const double s = std::sin(0.5 * theta);
    const double b = 2.0 * s * s / (theta * theta);
    c = (1.0 - a / (2.0 * b)) / (theta * theta);
  }
  return Mat3::Identity() - 0.5 * k + c * k * k;
}

}  // namespace

Twist make_twist(const Vec3& rho, const Vec3& phi) {
  Twist xi;
  xi << rho, phi;
  return xi;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Pose Pose::from_matrix(const Mat4& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

Pose Pose::normalized() const {
  Eigen::JacobiSVD<Mat3> svd(rotation_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return {r, translation_};
}

Mat3 exp_so3(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  double a, b;
  if (theta < kSmallAngle) {
    a = 1.0 - theta * theta / 6.0;
    b = 0.5 - theta * theta / 24.0;
  } else {
    a = std::sin(theta) / theta;
    const double s = std::sin(0.5 * theta);
    b = 2.0 * s * s / (theta * theta);
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 log_so3(const Mat3& r) {
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const Vec3 w = 0.5 * vee(r - r.transpose());  // sin(theta) * axis
  const double sin_theta = w.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < kSmallAngle) {
    return (1.0 + theta * theta / 6.0) * w;
  }
  if (cos_theta > -0.5) {
    return (theta / sin_theta) * w;
  }

  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part (1 - cos) a a^T and take its sign from w.
  const Mat3 b = 0.5 * (r + r.transpose()) - cos_theta * Mat3::Identity();
  Eigen::Index i;
  b.diagonal().maxCoeff(&i);
  Vec3 axis = b.col(i) / std::sqrt(std::max(b(i, i), 1e-300));
  axis.normalize();
  const double d = axis.dot(w);
  if (d < 0.0) {
    axis = -axis;
  } else if (d == 0.0) {
    for (int k = 0; k < 3; ++k) {
      if (std::abs(axis[k]) > 1e-12) {
        if (axis[k] < 0.0) axis = -axis;
        break;
      }
    }
  }
  return theta * axis;
}

Pose exp_se3(const Twist& xi) {
  const Vec3 rho = translational(xi);
  const Vec3 phi = rotational(xi);
  return {exp_so3(phi), left_jacobian_so3(phi) * rho};
}

Twist log_se3(const Pose& g) {
  const Vec3 phi = log_so3(g.rotation());
  const Vec3 rho = inverse_left_jacobian_so3(phi) * g.translation();
  return make_twist(rho, phi);
}

Mat6 adjoint(const Pose& g) {
  const Mat3& r = g.rotation();
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = r;
  ad.topRightCorner<3, 3>() = skew(g.translation()) * r;
  ad.bottomRightCorner<3, 3>() = r;
  return ad;
}

Mat36 action_jacobian(const Vec3& x) {
  Mat36 j;
  j.leftCols<3>().setIdentity();
  j.rightCols<3>() = -skew(x);
  return j;
}

double rotation_angle(const Pose& g) { return log_so3(g.rotation()).norm(); }

}  // namespace mvdepth
