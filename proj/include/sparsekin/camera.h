#pragma once

#include <vector>

#include <Eigen/Core>

#include "sparsekin/kinematics.h"
#include "sparsekin/liegroup.h"

namespace sparsekin {

using Mat23 = Eigen::Matrix<double, 2, 3>;

struct CameraModel {
  double focal = 1145.0;             // pixels
  Vec2 principal = Vec2::Zero();     // pixels
  double minDepth = 1e-3;            // model length units

  Vec2 normalize(const Vec2& pixel) const { return (pixel - principal) / focal; }
  Vec2 denormalize(const Vec2& uv) const { return uv * focal + principal; }
  void validate() const;
};

// Differential 2D motion of the landmarks in normalized coordinates, stacked
// (u_dot, v_dot) per landmark. Entries of invisible landmarks are ignored.
struct Observation {
  Eigen::VectorXd y;
  std::vector<bool> visible;
  int frameIndex = 0;

  int numLandmarks() const { return static_cast<int>(visible.size()); }
  static Observation Zero(int numLandmarks);
};

struct SystemMatrices {
  Eigen::MatrixXd A;           // 2N' x 6, M Gamma
  Eigen::MatrixXd B;           // 2N' x d, M J
  std::vector<int> rows;       // landmark index of each 2-row block
  double conditioning = 0.0;   // smallest singular value of A

  int visibleCount() const { return static_cast<int>(rows.size()); }
  // Picks the visible rows of a full 2N observation vector.
  Eigen::VectorXd reduce(const Eigen::VectorXd& yFull) const;
};

// (x/z, y/z); throws kDepthTooSmall when z < minDepth.
Vec2 Project(const Vec3& p, const CameraModel& cam);
Vec2 ProjectPixels(const Vec3& p, const CameraModel& cam);

// d(x/z, y/z)/dp.
Mat23 ProjectionJacobian(const Vec3& p, double minDepth = 1e-3);

// blockdiag(M(p_i)) as a dense 2N x 3N matrix.
Eigen::MatrixXd StackedProjectionJacobian(const std::vector<Vec3>& points, double minDepth = 1e-3);

// 3N x N, column i = e_i (x) p_i.
Eigen::MatrixXd StackedProjectionKernel(const std::vector<Vec3>& points, double minDepth = 1e-3);

// sigma_2 / sigma_1 of the centered point cloud.
double CollinearityRatio(const std::vector<Vec3>& points);

SystemMatrices AssembleSystem(const Skeleton& skel, const Pose& pose, const CameraModel& cam,
                              const std::vector<bool>& visible);
SystemMatrices AssembleSystem(const Skeleton& skel, const Pose& pose, const CameraModel& cam);

}  // namespace sparsekin
