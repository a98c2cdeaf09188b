#pragma once

#include <Eigen/Core>

namespace mvdepth {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

// se(3) increment ordered (rho, phi): translational part first, rotational
// part second. Jacobian columns follow the same layout everywhere.
using Twist = Vec6;

inline Vec3 translational(const Twist& xi) { return xi.head<3>(); }
inline Vec3 rotational(const Twist& xi) { return xi.tail<3>(); }
Twist make_twist(const Vec3& rho, const Vec3& phi);

Mat3 skew(const Vec3& v);

// Rigid transform x -> R x + t.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static Pose from_matrix(const Mat4& m);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Mat4 matrix() const;
  Pose inverse() const;
  Vec3 act(const Vec3& x) const { return rotation_ * x + translation_; }

  Pose operator*(const Pose& other) const {
    return {rotation_ * other.rotation_,
            rotation_ * other.translation_ + translation_};
  }
  Vec3 operator*(const Vec3& x) const { return act(x); }

  bool operator==(const Pose& other) const = default;

  // Projects the rotation back onto SO(3) (SVD). Used to keep long
  // composition chains orthonormal.
  Pose normalized() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

Pose exp_se3(const Twist& xi);

// Rotational magnitude of the result lies in [0, pi]. At exactly pi the axis
// sign is chosen so that its first nonzero component is positive.
Twist log_se3(const Pose& g);

Mat3 exp_so3(const Vec3& phi);
Vec3 log_so3(const Mat3& r);

// Ad_g with exp(Ad_g xi) = g exp(xi) g^-1.
Mat6 adjoint(const Pose& g);

// d(exp(xi) x)/d xi at xi = 0, i.e. [I | -skew(x)].
Mat36 action_jacobian(const Vec3& x);

// Rotation angle of g in radians.
double rotation_angle(const Pose& g);

}  // namespace mvdepth
