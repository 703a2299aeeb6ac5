#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sparsekin {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Element of SE(3). Acts on points as p -> R p + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform Identity() { return {}; }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  RigidTransform inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -rt * translation};
  }
  Mat4 matrix() const;
  static RigidTransform FromMatrix(const Mat4& m);

  // max |R^T R - I| and |det R - 1|.
  double orthonormalityError() const;
};

// Element of se(3). The velocity field it generates is p -> angular x p + linear.
struct Twist {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();

  Twist() = default;
  Twist(const Vec3& w, const Vec3& v) : angular(w), linear(v) {}

  // 4x4 homogeneous form [skew(w) v; 0 0].
  Mat4 hat() const;
  Vec6 vector() const;

  Twist operator*(double s) const { return {angular * s, linear * s}; }
  Twist operator+(const Twist& o) const { return {angular + o.angular, linear + o.linear}; }
};

// skew(p) q == p.cross(q).
Mat3 Skew(const Vec3& p);

// Closed-form exponential of xi * theta, any |angular|; a zero angular part
// gives a pure translation.
RigidTransform ExpTwist(const Twist& xi, double theta);

// Twist whose homogeneous form is T hat(xi) T^-1.
Twist ConjugateTwist(const RigidTransform& T, const Twist& xi);

// Velocity of point p under xi: skew(xi.angular) p + xi.linear.
Vec3 ApplyBodyVelocity(const Twist& xi, const Vec3& p);

// Nearest rotation in Frobenius norm (polar factor), translation untouched.
RigidTransform Renormalize(const RigidTransform& T);

// Rotation of `angle` rad about unit `axis`.
Mat3 AxisAngle(const Vec3& axis, double angle);

}  // namespace sparsekin
