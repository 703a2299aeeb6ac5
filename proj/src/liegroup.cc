#include "sparsekin/liegroup.h"

#include <cmath>

#include <Eigen/SVD>

namespace sparsekin {

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform RigidTransform::FromMatrix(const Mat4& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

double RigidTransform::orthonormalityError() const {
  double err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(err, std::abs(rotation.determinant() - 1.0));
}

Mat4 Twist::hat() const {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = Skew(angular);
  m.topRightCorner<3, 1>() = linear;
  return m;
}

Vec6 Twist::vector() const {
  Vec6 v;
  v << angular, linear;
  return v;
}

Mat3 Skew(const Vec3& p) {
  Mat3 s;
  s << 0.0, -p.z(), p.y(),
       p.z(), 0.0, -p.x(),
       -p.y(), p.x(), 0.0;
  return s;
}

RigidTransform ExpTwist(const Twist& xi, double theta) {
  const Vec3& w = xi.angular;
  const Vec3& v = xi.linear;
  const double wn = w.norm();
  if (wn == 0.0) {
    return {Mat3::Identity(), v * theta};
  }
  // General Rodrigues form with |w| folded into the angle, so slightly
  // non-unit axes (accumulated rigid twists) are also handled.
  const double angle = wn * theta;
  const Mat3 W = Skew(w);
  const Mat3 W2 = W * W;
  // R = I + a W + b W^2 and V = I theta + b W + c W^2.
  double a, b, c;
  if (std::abs(angle) < 1e-8) {
    // Second-order Taylor terms of sin(x)/x, (1-cos x)/x^2, (x - sin x)/x^3.
    const double t2 = theta * theta;
    a = theta * (1.0 - angle * angle / 6.0);
    b = t2 * (0.5 - angle * angle / 24.0);
    c = t2 * theta * (1.0 / 6.0 - angle * angle / 120.0);
  } else {
    const double wn2 = wn * wn;
    a = std::sin(angle) / wn;
    b = (1.0 - std::cos(angle)) / wn2;
    c = (angle - std::sin(angle)) / (wn2 * wn);
  }
  RigidTransform T;
  T.rotation = Mat3::Identity() + a * W + b * W2;
  const Mat3 V = Mat3::Identity() * theta + b * W + c * W2;
  T.translation = V * v;
  return T;
}

Twist ConjugateTwist(const RigidTransform& T, const Twist& xi) {
  Vec3 w = T.rotation * xi.angular;
  Vec3 v = T.rotation * xi.linear + T.translation.cross(w);
  return {w, v};
}

Vec3 ApplyBodyVelocity(const Twist& xi, const Vec3& p) {
  return xi.angular.cross(p) + xi.linear;
}

RigidTransform Renormalize(const RigidTransform& T) {
  Eigen::JacobiSVD<Mat3> svd(T.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0) {
    Mat3 U = svd.matrixU();
    U.col(2) *= -1.0;
    R = U * svd.matrixV().transpose();
  }
  return {R, T.translation};
}

Mat3 AxisAngle(const Vec3& axis, double angle) {
  return ExpTwist(Twist(axis.normalized(), Vec3::Zero()), angle).rotation;
}

}  // namespace sparsekin
