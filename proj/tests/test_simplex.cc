#include <gtest/gtest.h>
#include <Eigen/LU>

#include "sparsekin/experiments.h"
#include "sparsekin/simplex.h"

namespace sparsekin {
namespace {

LinearProgram Empty(int n) {
  LinearProgram lp;
  lp.c = Eigen::VectorXd::Zero(n);
  lp.Aeq.resize(0, n);
  lp.beq.resize(0);
  lp.Aub.resize(0, n);
  lp.bub.resize(0);
  lp.freeVars.assign(n, false);
  return lp;
}

TEST(SolveLp, Textbook) {
  LinearProgram lp = Empty(2);
  lp.c << 3, 5;
  lp.Aub.resize(3, 2);
  lp.Aub << 1, 0, 0, 2, 3, 2;
  lp.bub.resize(3);
  lp.bub << 4, 12, 18;
  LpResult r = SolveLp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 36.0, 1e-12);
  EXPECT_NEAR(r.x[0], 2.0, 1e-12);
  EXPECT_NEAR(r.x[1], 6.0, 1e-12);
}

TEST(SolveLp, Infeasible) {
  LinearProgram lp = Empty(1);
  lp.c << 1;
  lp.Aub.resize(2, 1);
  lp.Aub << 1, -1;
  lp.bub.resize(2);
  lp.bub << 1, -2;
  EXPECT_EQ(SolveLp(lp).status, LpStatus::kInfeasible);
}

TEST(SolveLp, Unbounded) {
  LinearProgram lp = Empty(2);
  lp.c << 1, 0;
  lp.Aub.resize(1, 2);
  lp.Aub << 1, -1;
  lp.bub.resize(1);
  lp.bub << 1;
  EXPECT_EQ(SolveLp(lp).status, LpStatus::kUnbounded);
}

TEST(SolveLp, FreeVariableAndEquality) {
  // max -x0 + x1, x0 free, x0 + x1 = 2, -x0 <= 3.
  LinearProgram lp = Empty(2);
  lp.c << -1, 1;
  lp.freeVars[0] = true;
  lp.Aeq.resize(1, 2);
  lp.Aeq << 1, 1;
  lp.beq.resize(1);
  lp.beq << 2;
  lp.Aub.resize(1, 2);
  lp.Aub << -1, 0;
  lp.bub.resize(1);
  lp.bub << 3;
  LpResult r = SolveLp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.x[0], -3.0, 1e-12);
  EXPECT_NEAR(r.x[1], 5.0, 1e-12);
  EXPECT_NEAR(r.objective, 8.0, 1e-12);
}

// Beale's example cycles under naive Dantzig pricing.
TEST(SolveLp, BealeDegenerate) {
  LinearProgram lp = Empty(4);
  lp.c << 0.75, -150, 0.02, -6;
  lp.Aub.resize(3, 4);
  lp.Aub << 0.25, -60, -0.04, 9,
            0.5, -90, -0.02, 3,
            0, 0, 1, 0;
  lp.bub.resize(3);
  lp.bub << 0, 0, 1;
  LpResult r = SolveLp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 0.05, 1e-12);
  EXPECT_NEAR(r.x[0], 0.04, 1e-12);
  EXPECT_NEAR(r.x[2], 1.0, 1e-12);
}

TEST(SolveLp, RedundantEqualities) {
  LinearProgram lp = Empty(3);
  lp.c << 1, 2, 3;
  lp.Aeq.resize(2, 3);
  lp.Aeq << 1, 1, 1, 2, 2, 2;
  lp.beq.resize(2);
  lp.beq << 1, 2;
  LpResult r = SolveLp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 3.0, 1e-12);
}

// Random bounded 3-variable problems against enumeration of all vertices.
TEST(SolveLp, MatchesVertexEnumeration) {
  Rng rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int m = 6;
    LinearProgram lp = Empty(3);
    lp.Aub.resize(m + 3, 3);
    lp.bub.resize(m + 3);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < 3; ++j) lp.Aub(i, j) = u(rng);
      lp.bub[i] = 0.2 + u(rng) + 1.0;
    }
    lp.Aub.bottomRows(3).setIdentity();
    lp.bub.tail(3).setConstant(5.0);
    for (int j = 0; j < 3; ++j) lp.c[j] = u(rng);

    // All constraints including x >= 0 as -x <= 0.
    Eigen::MatrixXd G(m + 6, 3);
    Eigen::VectorXd h(m + 6);
    G << lp.Aub, -Eigen::Matrix3d::Identity();
    h << lp.bub, Eigen::Vector3d::Zero();
    double best = -1e300;
    for (int a = 0; a < G.rows(); ++a)
      for (int b = a + 1; b < G.rows(); ++b)
        for (int c = b + 1; c < G.rows(); ++c) {
          Eigen::Matrix3d S;
          S << G.row(a), G.row(b), G.row(c);
          Eigen::FullPivLU<Eigen::Matrix3d> lu(S);
          if (!lu.isInvertible()) continue;
          Eigen::Vector3d x = lu.solve(Eigen::Vector3d(h[a], h[b], h[c]));
          if (((G * x - h).array() <= 1e-9).all()) best = std::max(best, lp.c.dot(x));
        }
    LpResult r = SolveLp(lp);
    ASSERT_EQ(r.status, LpStatus::kOptimal) << t;
    EXPECT_NEAR(r.objective, best, 1e-9) << t;
    EXPECT_LE((lp.Aub * r.x - lp.bub).maxCoeff(), 1e-9);
    EXPECT_GE(r.x.minCoeff(), -1e-12);
  }
}

}  // namespace
}  // namespace sparsekin
