#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sparsekin/liegroup.h"

namespace sparsekin {

// One rotational degree of freedom. Multi-DoF joints of the config are
// expanded into chains of these with zero offsets.
struct JointSpec {
  int id = 0;          // index into theta
  std::string name;
  int parent = -1;     // parent DoF index, -1 for the camera-to-root frame
  Vec3 offset = Vec3::Zero();  // parent frame -> this frame, before rotation
  Vec3 axis = Vec3::UnitZ();
  double boundMin = 0.0;  // rad
  double boundMax = 0.0;  // rad
  int group = 0;       // index of the config joint this DoF came from

  // Twist of this DoF expressed in its parent frame: rotation about `axis`
  // through `offset`.
  Twist twist() const { return {axis, offset.cross(axis)}; }
};

struct LandmarkSpec {
  int id = 0;
  int joint = -1;      // deepest parent DoF, -1 for the root frame
  Vec3 local = Vec3::Zero();
  std::string name;
};

// Config-level joint (before DoF expansion), kept for naming and reporting.
struct JointGroup {
  int id = 0;
  std::string name;
  int parent = -1;
  std::vector<int> dofs;
};

class Skeleton {
 public:
  Skeleton() = default;
  Skeleton(std::string name, std::vector<JointSpec> joints,
           std::vector<LandmarkSpec> landmarks, std::vector<JointGroup> groups);

  const std::string& name() const { return name_; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const std::vector<LandmarkSpec>& landmarks() const { return landmarks_; }
  const std::vector<JointGroup>& groups() const { return groups_; }

  int dof() const { return static_cast<int>(joints_.size()); }
  int numLandmarks() const { return static_cast<int>(landmarks_.size()); }

  // DoF indices on the path root -> landmark's joint, root first.
  const std::vector<int>& chain(int landmark) const { return chains_[landmark]; }
  // True when DoF j moves landmark i.
  bool moves(int j, int landmark) const { return chainMask_(landmark, j) != 0; }

  Eigen::VectorXd lowerBounds() const;
  Eigen::VectorXd upperBounds() const;

 private:
  std::string name_;
  std::vector<JointSpec> joints_;
  std::vector<LandmarkSpec> landmarks_;
  std::vector<JointGroup> groups_;
  std::vector<std::vector<int>> chains_;
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> chainMask_;
};

struct Pose {
  RigidTransform cameraToRoot;
  Eigen::VectorXd theta;  // rad
};

struct ForwardKinematicsResult {
  std::vector<RigidTransform> joints;     // camera -> DoF frame, after its rotation
  std::vector<Vec3> landmarks;            // camera frame
};

// Parses the JSON skeleton config (angles in degrees) and validates it.
Skeleton LoadSkeleton(std::string_view configText);
Skeleton LoadSkeletonFile(const std::string& path);

ForwardKinematicsResult ForwardKinematics(const Skeleton& skel, const Pose& pose);
std::vector<Vec3> LandmarkPositions(const Skeleton& skel, const Pose& pose);

// 3N x d. Column j is nonzero only on landmarks that DoF j moves.
Eigen::MatrixXd ArticulatedJacobian(const Skeleton& skel, const Pose& pose);

// 3N x 6 with block [I | -skew(p_i)], so that rho = (v, w) gives
// p_dot = v + w x p.
Eigen::MatrixXd RigidJacobian(const std::vector<Vec3>& points);

Eigen::VectorXd ClampAngles(const Eigen::VectorXd& theta, const Skeleton& skel);
bool WithinBounds(const Eigen::VectorXd& theta, const Skeleton& skel, double slack = 0.0);

// Pose with all angles zero and the given camera-to-root transform.
Pose RestPose(const Skeleton& skel, const RigidTransform& cameraToRoot);

// Camera-to-root transform placing the (y-up, facing +z) body upright at the
// given depth in front of a y-down camera.
RigidTransform FrontalCameraToRoot(double depth);

}  // namespace sparsekin
