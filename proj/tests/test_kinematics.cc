#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sparsekin/errors.h"
#include "sparsekin/kinematics.h"
#include "test_util.h"

namespace sparsekin {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const char* kSingleJoint = R"({
  "name": "single",
  "joints": [
    {"id": 0, "name": "root", "parent": -1, "offset": [0, 0, 0]},
    {"id": 1, "name": "j", "parent": 0, "offset": [0, 0, 0],
     "dof": [{"axis": [0, 0, 1], "min_deg": -90, "max_deg": 90}]}
  ],
  "landmarks": [{"id": 0, "name": "tip", "joint": 1, "local": [1, 0, 0]}]
})";

int DofIndex(const Skeleton& skel, const std::string& name) {
  for (const auto& j : skel.joints())
    if (j.name == name) return j.id;
  return -1;
}

// Product of exponentials written out from the reference configuration:
// p = Tc exp(xi_1 t_1) ... exp(xi_k t_k) p0, with every xi taken at theta = 0.
std::vector<Vec3> ChainProductOracle(const Skeleton& skel, const Pose& pose) {
  std::vector<Vec3> origin(skel.dof());
  for (const auto& j : skel.joints()) origin[j.id] = (j.parent < 0 ? Vec3::Zero() : origin[j.parent]) + j.offset;
  std::vector<Vec3> out;
  for (const auto& l : skel.landmarks()) {
    Vec3 p = (l.joint < 0 ? Vec3::Zero() : origin[l.joint]) + l.local;
    const auto& chain = skel.chain(l.id);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const JointSpec& j = skel.joints()[*it];
      Twist xi(j.axis, origin[j.id].cross(j.axis));
      p = ExpTwist(xi, pose.theta[j.id]) * p;
    }
    out.push_back(pose.cameraToRoot * p);
  }
  return out;
}

TEST(LoadSkeleton, DefaultSkeletonDimensions) {
  const Skeleton& s = sktest::Skeleton40();
  EXPECT_EQ(s.dof(), 40);
  EXPECT_EQ(s.numLandmarks(), 13);
  for (const auto& j : s.joints()) EXPECT_LE(j.boundMin, j.boundMax) << j.name;
}

TEST(LoadSkeleton, SingleJoint) {
  Skeleton s = LoadSkeleton(kSingleJoint);
  EXPECT_EQ(s.dof(), 1);
  EXPECT_EQ(s.numLandmarks(), 1);
}

ErrorCode LoadError(const std::string& text) {
  try {
    LoadSkeleton(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error for " << text;
  return ErrorCode::kIo;
}

TEST(LoadSkeleton, SelfParentIsCycle) {
  EXPECT_EQ(LoadError(R"({"joints": [
      {"id": 0, "parent": -1, "offset": [0,0,0]},
      {"id": 1, "parent": 1, "offset": [0,0,0], "dof": [{"axis": [1,0,0], "min_deg": 0, "max_deg": 1}]}],
    "landmarks": [{"id": 0, "joint": 1, "local": [1,0,0]}]})"),
            ErrorCode::kCycle);
}

TEST(LoadSkeleton, RejectsMalformedConfigs) {
  EXPECT_EQ(LoadError("{not json"), ErrorCode::kParse);
  EXPECT_EQ(LoadError(R"({"joints": [
      {"id": 0, "parent": -1, "offset": [0,0,0], "dof": [{"axis": [2,0,0], "min_deg": 0, "max_deg": 1}]}],
    "landmarks": [{"id": 0, "joint": 0, "local": [1,0,0]}]})"),
            ErrorCode::kNonUnitAxis);
  EXPECT_EQ(LoadError(R"({"joints": [
      {"id": 0, "parent": -1, "offset": [0,0,0], "dof": [{"axis": [1,0,0], "min_deg": 5, "max_deg": 1}]}],
    "landmarks": [{"id": 0, "joint": 0, "local": [1,0,0]}]})"),
            ErrorCode::kInvalidBounds);
  EXPECT_EQ(LoadError(R"({"joints": [
      {"id": 0, "parent": -1, "offset": [0,0,0]}, {"id": 0, "parent": -1, "offset": [0,0,0]}],
    "landmarks": [{"id": 0, "joint": 0, "local": [1,0,0]}]})"),
            ErrorCode::kDuplicateId);
  EXPECT_EQ(LoadError(R"({"joints": [{"id": 0, "parent": -1, "offset": [0,0,0]}],
    "landmarks": [{"id": 0, "joint": 7, "local": [1,0,0]}]})"),
            ErrorCode::kUnknownJoint);
}

TEST(ForwardKinematics, ReferenceConfigurationSumsOffsets) {
  const Skeleton& s = sktest::Skeleton40();
  Pose pose = RestPose(s, RigidTransform::Identity());
  auto p = LandmarkPositions(s, pose);
  // head: hip -> spine1 -> spine2 -> neck, then local.
  EXPECT_LT((p[0] - Vec3(0, 0.1 + 0.25 + 0.25 + 0.22, 0.03)).norm(), 1e-15);
  // r_ankle: hip -> r_mid_hip -> r_hip -> r_knee, then local.
  EXPECT_LT((p[9] - Vec3(-0.04 - 0.06, -0.05 - 0.44 - 0.42, 0)).norm(), 1e-15);
}

TEST(ForwardKinematics, MatchesChainProductOracle) {
  const Skeleton& s = sktest::Skeleton40();
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    Pose pose = sktest::RandomPose(s, rng);
    auto got = LandmarkPositions(s, pose);
    auto ref = ChainProductOracle(s, pose);
    for (int i = 0; i < s.numLandmarks(); ++i) EXPECT_LT((got[i] - ref[i]).norm(), 1e-13);
  }
}

TEST(ForwardKinematics, RejectsWrongDimension) {
  const Skeleton& s = sktest::Skeleton40();
  Pose pose{RigidTransform::Identity(), Eigen::VectorXd::Zero(39)};
  EXPECT_THROW(ForwardKinematics(s, pose), Error);
}

TEST(ArticulatedJacobian, ElbowDoesNotMoveHip) {
  const Skeleton& s = sktest::Skeleton40();
  Rng rng(1);
  Pose pose = sktest::RandomPose(s, rng);
  Eigen::MatrixXd J = ArticulatedJacobian(s, pose);
  const int elbow = DofIndex(s, "r_elbow");
  ASSERT_GE(elbow, 0);
  EXPECT_EQ((J.block<3, 1>(3 * 7, elbow).norm()), 0.0);
  EXPECT_GT((J.block<3, 1>(3 * 3, elbow).norm()), 0.0);  // r_wrist
}

TEST(ArticulatedJacobian, SparsityFollowsChains) {
  const Skeleton& s = sktest::Skeleton40();
  Rng rng(2);
  Eigen::MatrixXd J = ArticulatedJacobian(s, sktest::RandomPose(s, rng));
  for (int i = 0; i < s.numLandmarks(); ++i)
    for (int j = 0; j < s.dof(); ++j)
      if (!s.moves(j, i)) EXPECT_EQ((J.block<3, 1>(3 * i, j).norm()), 0.0);
}

TEST(ArticulatedJacobian, SingleJointUnitField) {
  Skeleton s = LoadSkeleton(kSingleJoint);
  Eigen::MatrixXd J = ArticulatedJacobian(s, RestPose(s, RigidTransform::Identity()));
  ASSERT_EQ(J.rows(), 3);
  ASSERT_EQ(J.cols(), 1);
  EXPECT_LT((J.col(0) - Eigen::Vector3d(0, 1, 0)).norm(), 1e-15);
}

TEST(ArticulatedJacobian, MatchesFiniteDifferences) {
  const Skeleton& s = sktest::Skeleton40();
  Rng rng(33);
  for (int t = 0; t < 30; ++t) {
    Pose pose = sktest::RandomPose(s, rng);
    Eigen::MatrixXd diff = ArticulatedJacobian(s, pose) - sktest::NumericArticulatedJacobian(s, pose);
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(RigidJacobian, OriginBlock) {
  Eigen::MatrixXd G = RigidJacobian({Vec3::Zero()});
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(3, 6);
  ref.leftCols(3).setIdentity();
  EXPECT_EQ(G, ref);
}

// rho = (v, w) must reproduce the velocity w x p + v of the rigid twist.
TEST(RigidJacobian, MatchesTwistVelocity) {
  Rng rng(9);
  std::vector<Vec3> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(sktest::RandomVec3(rng, 3.0));
  Eigen::MatrixXd G = RigidJacobian(pts);
  Vec3 v = sktest::RandomVec3(rng), w = sktest::RandomVec3(rng);
  Vec6 rho;
  rho << v, w;
  Eigen::VectorXd pdot = G * rho;
  for (int i = 0; i < 5; ++i) EXPECT_LT((pdot.segment<3>(3 * i) - (w.cross(pts[i]) + v)).norm(), 1e-14);
}

TEST(ClampAngles, InsideBoundsUnchanged) {
  const Skeleton& s = sktest::Skeleton40();
  Eigen::VectorXd mid = 0.5 * (s.lowerBounds() + s.upperBounds());
  EXPECT_EQ(ClampAngles(mid, s), mid);
}

TEST(ClampAngles, KneeAndElbowLimits) {
  const Skeleton& s = sktest::Skeleton40();
  const int knee = DofIndex(s, "r_knee");
  const int elbow = DofIndex(s, "r_elbow");
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(s.dof());
  theta[knee] = 170 * kDeg;
  theta[elbow] = 10 * kDeg;
  Eigen::VectorXd c = ClampAngles(theta, s);
  EXPECT_NEAR(c[knee], 150 * kDeg, 1e-15);
  EXPECT_NEAR(c[elbow], 0.0, 1e-15);
  EXPECT_TRUE(WithinBounds(c, s));
  EXPECT_FALSE(WithinBounds(theta, s));
}

}  // namespace
}  // namespace sparsekin
