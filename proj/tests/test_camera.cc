#include <gtest/gtest.h>
#include <Eigen/SVD>

#include "sparsekin/camera.h"
#include "sparsekin/errors.h"
#include "test_util.h"

namespace sparsekin {
namespace {

double MinSingular(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().tail<1>()[0];
}

std::vector<Vec3> RandomPoints(Rng& rng, int n) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.push_back(sktest::RandomVec3(rng, 1.0) + Vec3(0, 0, 4));
  return pts;
}

TEST(Project, Examples) {
  CameraModel cam;
  EXPECT_EQ(Project(Vec3(0, 0, 1), cam), Vec2(0, 0));
  EXPECT_EQ(Project(Vec3(2, -1, 2), cam), Vec2(1, -0.5));
  try {
    Project(Vec3(1, 1, 1e-6), cam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDepthTooSmall);
  }
}

TEST(Project, PixelsRoundTrip) {
  CameraModel cam = sktest::Camera();
  Vec2 px = ProjectPixels(Vec3(0.5, -0.25, 2.5), cam);
  EXPECT_LT((cam.normalize(px) - Vec2(0.2, -0.1)).norm(), 1e-15);
}

TEST(ProjectionJacobian, OnAxis) {
  Mat23 ref;
  ref << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ(ProjectionJacobian(Vec3(0, 0, 1)), ref);
}

TEST(ProjectionJacobian, MatchesFiniteDifferences) {
  CameraModel cam;
  Rng rng(4);
  const double h = 1e-6;
  for (int t = 0; t < 100; ++t) {
    Vec3 p = sktest::RandomVec3(rng) + Vec3(0, 0, 3);
    Mat23 fd;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Unit(k) * h;
      fd.col(k) = (Project(p + e, cam) - Project(p - e, cam)) / (2 * h);
    }
    EXPECT_LT((fd - ProjectionJacobian(p)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ProjectionJacobian, AnnihilatesViewingRay) {
  Rng rng(2);
  auto pts = RandomPoints(rng, 20);
  for (const Vec3& p : pts) EXPECT_LT((ProjectionJacobian(p) * p).norm(), 1e-15);
  Eigen::MatrixXd MK = StackedProjectionJacobian(pts) * StackedProjectionKernel(pts);
  EXPECT_LT(MK.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StackedProjectionKernel, SinglePoint) {
  Eigen::MatrixXd K = StackedProjectionKernel({Vec3(0, 0, 2)});
  ASSERT_EQ(K.rows(), 3);
  ASSERT_EQ(K.cols(), 1);
  EXPECT_EQ(Eigen::Vector3d(K.col(0)), Vec3(0, 0, 2));
}

TEST(RigidKernel, OnePointHasThreeDimensionalKernel) {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    Vec3 p = sktest::RandomVec3(rng, 3.0);
    Eigen::MatrixXd K(6, 3);
    K << Skew(p), Mat3::Identity();
    EXPECT_LT((RigidJacobian({p}) * K).norm(), 1e-12);
    EXPECT_GT(MinSingular(K), 0.5);
  }
}

TEST(RigidKernel, TwoPointsRotateAboutTheirLine) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    Vec3 p1 = sktest::RandomVec3(rng, 3.0), p2 = sktest::RandomVec3(rng, 3.0);
    Vec3 w = p2 - p1;
    Vec6 k;
    k << p1.cross(w), w;
    EXPECT_LT((RigidJacobian({p1, p2}) * k).norm(), 1e-12 * std::max(1.0, k.norm()));
  }
}

TEST(RigidKernel, ThreeNonCollinearPointsAreRigid) {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    EXPECT_GT(MinSingular(RigidJacobian(RandomPoints(rng, 3))), 1e-8);
  }
}

TEST(CollinearityRatio, DetectsLine) {
  EXPECT_LT(CollinearityRatio({Vec3(0, 0, 1), Vec3(1, 1, 2), Vec3(2, 2, 3)}), 1e-12);
  EXPECT_GT(CollinearityRatio({Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1)}), 0.5);
}

TEST(AssembleSystem, RestPoseShapes) {
  const Skeleton& s = sktest::Skeleton40();
  Pose pose = RestPose(s, FrontalCameraToRoot(3.0));
  SystemMatrices sys = AssembleSystem(s, pose, sktest::Camera());
  EXPECT_EQ(sys.A.rows(), 26);
  EXPECT_EQ(sys.A.cols(), 6);
  EXPECT_EQ(sys.B.rows(), 26);
  EXPECT_EQ(sys.B.cols(), 40);
  EXPECT_GT(sys.conditioning, 1e-8);
  EXPECT_NEAR(sys.conditioning, MinSingular(sys.A), 1e-12);
}

TEST(AssembleSystem, TooFewVisible) {
  const Skeleton& s = sktest::Skeleton40();
  Pose pose = RestPose(s, FrontalCameraToRoot(3.0));
  std::vector<bool> vis(13, false);
  vis[0] = vis[5] = true;
  try {
    AssembleSystem(s, pose, sktest::Camera(), vis);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewVisible);
  }
}

TEST(AssembleSystem, MaskSelectsRows) {
  const Skeleton& s = sktest::Skeleton40();
  Rng rng(3);
  Pose pose = sktest::RandomPose(s, rng);
  SystemMatrices full = AssembleSystem(s, pose, sktest::Camera());
  std::vector<bool> vis(13, true);
  vis[4] = false;
  SystemMatrices part = AssembleSystem(s, pose, sktest::Camera(), vis);
  ASSERT_EQ(part.visibleCount(), 12);
  EXPECT_EQ(part.A.topRows(8), full.A.topRows(8));
  EXPECT_EQ(part.B.bottomRows(16), full.B.bottomRows(16));
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(26, 0, 25);
  EXPECT_EQ(part.reduce(y)[8], 10.0);
}

// Forward check of A and B: a small motion applied through the full
// nonlinear model changes the projections by A rho + B omega to first order.
TEST(AssembleSystem, LinearizesProjection) {
  const Skeleton& s = sktest::Skeleton40();
  CameraModel cam = sktest::Camera();
  Rng rng(12);
  const double h = 1e-6;
  for (int t = 0; t < 20; ++t) {
    Pose pose = sktest::RandomPose(s, rng);
    SystemMatrices sys = AssembleSystem(s, pose, cam);
    Eigen::VectorXd omega = Eigen::VectorXd::Random(s.dof());
    Vec6 rho = Vec6::Random();
    auto proj = [&](double sgn) {
      Pose p = pose;
      p.theta += sgn * h * omega;
      Twist xi(rho.tail<3>(), rho.head<3>());
      p.cameraToRoot = ExpTwist(xi, sgn * h) * pose.cameraToRoot;
      Eigen::VectorXd uv(26);
      auto pts = LandmarkPositions(s, p);
      for (int i = 0; i < 13; ++i) uv.segment<2>(2 * i) = Project(pts[i], cam);
      return uv;
    };
    Eigen::VectorXd fd = (proj(1) - proj(-1)) / (2 * h);
    EXPECT_LT((fd - sys.A * rho - sys.B * omega).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(AssembleSystem, RigidBlockWellConditionedOnRandomPoses) {
  const Skeleton& s = sktest::Skeleton40();
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    SystemMatrices sys = AssembleSystem(s, sktest::RandomPose(s, rng), sktest::Camera());
    auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(sys.A).singularValues();
    EXPECT_GT(sv[5], 1e-10 * sv[0]);
  }
}

}  // namespace
}  // namespace sparsekin
