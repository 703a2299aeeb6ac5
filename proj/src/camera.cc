#include "sparsekin/camera.h"

#include <string>

#include <Eigen/SVD>

#include "sparsekin/errors.h"

namespace sparsekin {

namespace {

constexpr double kCollinearRatio = 1e-6;

void CheckDepth(const Vec3& p, double minDepth) {
  if (!(p.z() >= minDepth)) {
    throw Error(ErrorCode::kDepthTooSmall,
                "point depth " + std::to_string(p.z()) + " below minimum " + std::to_string(minDepth));
  }
}

}  // namespace

void CameraModel::validate() const {
  if (!(focal > 0.0)) throw Error(ErrorCode::kInvalidConfig, "camera focal must be positive");
  if (!(minDepth > 0.0)) throw Error(ErrorCode::kInvalidConfig, "camera min_depth must be positive");
}

Observation Observation::Zero(int numLandmarks) {
  Observation o;
  o.y = Eigen::VectorXd::Zero(2 * numLandmarks);
  o.visible.assign(numLandmarks, true);
  return o;
}

Eigen::VectorXd SystemMatrices::reduce(const Eigen::VectorXd& yFull) const {
  Eigen::VectorXd y(2 * rows.size());
  for (size_t k = 0; k < rows.size(); ++k) y.segment<2>(2 * k) = yFull.segment<2>(2 * rows[k]);
  return y;
}

Vec2 Project(const Vec3& p, const CameraModel& cam) {
  CheckDepth(p, cam.minDepth);
  return {p.x() / p.z(), p.y() / p.z()};
}

Vec2 ProjectPixels(const Vec3& p, const CameraModel& cam) {
  return cam.denormalize(Project(p, cam));
}

Mat23 ProjectionJacobian(const Vec3& p, double minDepth) {
  CheckDepth(p, minDepth);
  const double iz = 1.0 / p.z();
  Mat23 M;
  M << iz, 0.0, -p.x() * iz * iz,
       0.0, iz, -p.y() * iz * iz;
  return M;
}

Eigen::MatrixXd StackedProjectionJacobian(const std::vector<Vec3>& points, double minDepth) {
  const int n = static_cast<int>(points.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 3 * n);
  for (int i = 0; i < n; ++i) M.block<2, 3>(2 * i, 3 * i) = ProjectionJacobian(points[i], minDepth);
  return M;
}

Eigen::MatrixXd StackedProjectionKernel(const std::vector<Vec3>& points, double minDepth) {
  const int n = static_cast<int>(points.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(3 * n, n);
  for (int i = 0; i < n; ++i) {
    CheckDepth(points[i], minDepth);
    K.block<3, 1>(3 * i, i) = points[i];
  }
  return K;
}

double CollinearityRatio(const std::vector<Vec3>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) return 0.0;
  Eigen::MatrixXd P(n, 3);
  for (int i = 0; i < n; ++i) P.row(i) = points[i].transpose();
  P.rowwise() -= P.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
  const auto& s = svd.singularValues();
  return s[0] > 0.0 ? s[1] / s[0] : 0.0;
}

SystemMatrices AssembleSystem(const Skeleton& skel, const Pose& pose, const CameraModel& cam,
                              const std::vector<bool>& visible) {
  if (static_cast<int>(visible.size()) != skel.numLandmarks()) {
    throw Error(ErrorCode::kDimensionMismatch, "visibility mask size differs from landmark count");
  }
  SystemMatrices sys;
  for (int i = 0; i < skel.numLandmarks(); ++i) {
    if (visible[i]) sys.rows.push_back(i);
  }
  if (sys.rows.size() < 3) {
    throw Error(ErrorCode::kTooFewVisible,
                "need at least 3 visible landmarks, have " + std::to_string(sys.rows.size()));
  }

  const ForwardKinematicsResult fk = ForwardKinematics(skel, pose);
  std::vector<Vec3> pts;
  pts.reserve(sys.rows.size());
  for (int i : sys.rows) pts.push_back(fk.landmarks[i]);
  if (CollinearityRatio(pts) <= kCollinearRatio) {
    throw Error(ErrorCode::kCollinearLandmarks, "visible landmarks are collinear");
  }

  const Eigen::MatrixXd J = ArticulatedJacobian(skel, pose);
  const int rows = 2 * static_cast<int>(sys.rows.size());
  sys.A.resize(rows, 6);
  sys.B.resize(rows, skel.dof());
  for (size_t k = 0; k < sys.rows.size(); ++k) {
    const int i = sys.rows[k];
    const Mat23 M = ProjectionJacobian(pts[k], cam.minDepth);
    Eigen::Matrix<double, 3, 6> G;
    G.leftCols<3>().setIdentity();
    G.rightCols<3>() = -Skew(pts[k]);
    sys.A.middleRows<2>(2 * k) = M * G;
    sys.B.middleRows<2>(2 * k) = M * J.middleRows<3>(3 * i);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.A);
  sys.conditioning = svd.singularValues()[5];
  return sys;
}

SystemMatrices AssembleSystem(const Skeleton& skel, const Pose& pose, const CameraModel& cam) {
  return AssembleSystem(skel, pose, cam, std::vector<bool>(skel.numLandmarks(), true));
}

}  // namespace sparsekin
