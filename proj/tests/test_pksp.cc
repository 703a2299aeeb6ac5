#include <cmath>
#include <climits>
#include <functional>
#include <numbers>

#include <gtest/gtest.h>
#include <Eigen/QR>

#include "sparsekin/errors.h"
#include "sparsekin/pksp.h"
#include "test_util.h"

namespace sparsekin {
namespace {

AmbiguityBasis Span(std::initializer_list<Eigen::VectorXd> cols) {
  AmbiguityBasis b;
  const int d = static_cast<int>(cols.begin()->size());
  Eigen::MatrixXd M(d, static_cast<int>(cols.size()));
  int k = 0;
  for (const auto& c : cols) M.col(k++) = c;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  b.Z = qr.householderQ() * Eigen::MatrixXd::Identity(d, M.cols());
  return b;
}

Eigen::VectorXd V311111() {
  Eigen::VectorXd v(6);
  v << 3, 1, 1, 1, 1, 1;
  return v;
}

Support Sup(std::vector<int> idx) {
  Support F;
  F.indices = std::move(idx);
  return F;
}

// Smallest ||v_Fbar||_1 - ||v_F||_1 over a dense sample of the unit circle
// in a 2-D span.
double SampledMargin(const AmbiguityBasis& b, const Support& F, int samples = 200000) {
  double best = 1e300;
  for (int t = 0; t < samples; ++t) {
    const double a = std::numbers::pi * t / samples;
    Eigen::VectorXd v = b.Z.col(0) * std::cos(a) + b.Z.col(1) * std::sin(a);
    best = std::min(best, SupportMargin(v, F));
  }
  return best;
}

TEST(AmbiguityNullspace, FullRankGivesEmptyBasis) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Random(12, 6);
  Eigen::MatrixXd B = Eigen::MatrixXd::Random(12, 5);
  AmbiguityBasis b = AmbiguityNullspace(A, B);
  EXPECT_EQ(b.dim(), 0);
  EXPECT_EQ(b.dof(), 5);
}

TEST(AmbiguityNullspace, ColumnInRigidSpanAppears) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Random(12, 6);
  Eigen::MatrixXd B(12, 4);
  B.leftCols(3) = Eigen::MatrixXd::Random(12, 3);
  B.col(3) = A.col(0);
  AmbiguityBasis b = AmbiguityNullspace(A, B);
  ASSERT_EQ(b.dim(), 1);
  EXPECT_NEAR(std::abs(b.Z(3, 0)), 1.0, 1e-12);
}

TEST(AmbiguityNullspace, DirectionsMapIntoRigidSpan) {
  const Skeleton& s = sktest::Skeleton40();
  Rng rng(5);
  Pose pose = sktest::RandomPose(s, rng);
  SystemMatrices sys = AssembleSystem(s, pose, sktest::Camera());
  AmbiguityBasis b = AmbiguityNullspace(sys.A, sys.B);
  // 26 rows, 6 rigid, 40 articulated: at least 20 ambiguous directions.
  EXPECT_GE(b.dim(), 20);
  Eigen::MatrixXd Q = RigidRangeBasis(sys.A);
  Eigen::MatrixXd BZ = sys.B * b.Z;
  EXPECT_LT((BZ - Q * (Q.transpose() * BZ)).norm(), 1e-9);
  EXPECT_LT((b.Z.transpose() * b.Z - Eigen::MatrixXd::Identity(b.dim(), b.dim())).norm(), 1e-12);
}

TEST(CheckPKSP, EmptyBasisHoldsVacuously) {
  AmbiguityBasis b;
  b.Z.resize(5, 0);
  PkspVerdict v = CheckPKSP(b, Sup({0, 1}));
  EXPECT_TRUE(v.holds);
  EXPECT_EQ(v.margin, 1.0);
  EXPECT_FALSE(v.counterexample);
  auto [ov, worst] = CheckPKSPOrder(b, 3);
  EXPECT_TRUE(ov.holds);
}

TEST(CheckPKSP, SingleDirectionDominatedEntry) {
  AmbiguityBasis b = Span({V311111()});
  PkspVerdict v = CheckPKSP(b, Sup({0}));
  EXPECT_TRUE(v.holds);
  EXPECT_FALSE(v.counterexample);
  // l1-normalized: (5 - 3) / 8.
  EXPECT_NEAR(v.margin, 0.25, 1e-12);
  for (double c : {-2.0, -0.3, 0.01, 1.0, 7.0}) EXPECT_NEAR(SupportMargin(c * V311111(), Sup({0})), 0.25, 1e-15);
}

TEST(CheckPKSP, SingleDirectionTie) {
  AmbiguityBasis b = Span({V311111()});
  Support F = Sup({0, 1});
  PkspVerdict v = CheckPKSP(b, F);
  EXPECT_FALSE(v.holds);
  ASSERT_TRUE(v.counterexample);
  const Eigen::VectorXd& c = *v.counterexample;
  double inF = std::abs(c[0]) + std::abs(c[1]);
  EXPECT_GE(inF, c.lpNorm<1>() - inF - 1e-9);
  EXPECT_LT((c - b.Z * (b.Z.transpose() * c)).norm(), 1e-9);
  EXPECT_NEAR(v.margin, 0.0, 1e-12);
}

TEST(CheckPKSPOrder, SingleDirection) {
  AmbiguityBasis b = Span({V311111()});
  auto [v1, w1] = CheckPKSPOrder(b, 1);
  EXPECT_TRUE(v1.holds);
  EXPECT_EQ(w1, Sup({0}));
  EXPECT_NEAR(v1.margin, 0.25, 1e-12);
  auto [v2, w2] = CheckPKSPOrder(b, 2);
  EXPECT_FALSE(v2.holds);
  EXPECT_EQ(w2.size(), 2);
  EXPECT_TRUE(w2.contains(0));
}

// Exhaustive oracle over supports for a 2-D span: the order verdict must be
// the worst individual verdict.
TEST(CheckPKSPOrder, AgreesWithIndividualChecks) {
  Rng rng(3);
  Eigen::VectorXd a = Eigen::VectorXd::Random(7), c = Eigen::VectorXd::Random(7);
  AmbiguityBasis b = Span({a, c});
  for (int s = 1; s <= 3; ++s) {
    auto [ov, worst] = CheckPKSPOrder(b, s, PkspMode::kExact, 1000000, 1, Execution::kSerial);
    auto [pv, pworst] = CheckPKSPOrder(b, s, PkspMode::kExact, 1000000, 1, Execution::kParallel);
    EXPECT_EQ(ov.holds, pv.holds);
    EXPECT_EQ(worst, pworst);
    EXPECT_EQ(ov.margin, pv.margin);
    double minMargin = 1e300;
    bool all = true;
    std::vector<int> idx(s);
    std::function<void(int, int)> rec = [&](int pos, int start) {
      if (pos == s) {
        PkspVerdict v = CheckPKSP(b, Sup(idx));
        minMargin = std::min(minMargin, v.margin);
        all = all && v.holds;
        return;
      }
      for (int i = start; i < 7; ++i) {
        idx[pos] = i;
        rec(pos + 1, i + 1);
      }
    };
    rec(0, 0);
    EXPECT_EQ(ov.holds, all);
    EXPECT_NEAR(ov.margin, minMargin, 1e-12);
  }
}

TEST(CheckPKSP, ExactMarginMatchesDenseSampling) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    AmbiguityBasis b = Span({Eigen::VectorXd::Random(8), Eigen::VectorXd::Random(8)});
    Support F = RandomSupport(8, 1 + t % 3, rng);
    PkspVerdict v = CheckPKSP(b, F);
    const double sampled = SampledMargin(b, F);
    EXPECT_LE(v.margin, sampled + 1e-12);
    EXPECT_GE(v.margin, sampled - 1e-4);
    EXPECT_EQ(v.holds, v.margin > 0);
    EXPECT_EQ(v.linearPrograms, 1LL << (F.size() - 1));
  }
}

TEST(CheckPKSP, RestPoseOrderOneConsistent) {
  const Skeleton& s = sktest::Skeleton40();
  SystemMatrices sys = AssembleSystem(s, RestPose(s, FrontalCameraToRoot(3.0)), sktest::Camera());
  AmbiguityBasis b = AmbiguityNullspace(sys.A, sys.B);
  auto [ov, worst] = CheckPKSPOrder(b, 1);
  bool all = true;
  double minMargin = 1e300;
  for (int j = 0; j < 40; ++j) {
    PkspVerdict v = CheckPKSP(b, Sup({j}));
    all = all && v.holds;
    minMargin = std::min(minMargin, v.margin);
  }
  EXPECT_EQ(ov.holds, all);
  EXPECT_NEAR(ov.margin, minMargin, 1e-12);
}

TEST(CheckPKSP, RandomizedNeverReportsFalseCounterexample) {
  const Skeleton& s = sktest::Skeleton40();
  Rng rng(6);
  Pose pose = sktest::RandomPose(s, rng);
  SystemMatrices sys = AssembleSystem(s, pose, sktest::Camera());
  AmbiguityBasis b = AmbiguityNullspace(sys.A, sys.B);
  int found = 0;
  for (int t = 0; t < 30; ++t) {
    Support F = RandomSupport(40, 2 + t % 6, rng);
    PkspVerdict r = CheckPKSP(b, F, PkspMode::kRandomized, 500, t);
    PkspVerdict e = CheckPKSP(b, F);
    EXPECT_GE(r.margin, e.margin - 1e-9);
    if (r.counterexample) {
      ++found;
      EXPECT_FALSE(e.holds);
      const Eigen::VectorXd& c = *r.counterexample;
      EXPECT_LE(SupportMargin(c, F), 1e-9);
      EXPECT_LT((c - b.Z * (b.Z.transpose() * c)).norm(), 1e-9 * c.norm());
    }
  }
  EXPECT_GT(found, 0);
}

TEST(CheckPKSP, OverBudget) {
  AmbiguityBasis b = Span({Eigen::VectorXd::Random(40), Eigen::VectorXd::Random(40)});
  try {
    CheckPKSPOrder(b, 13);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
  }
  Support F;
  for (int i = 0; i < 13; ++i) F.indices.push_back(i);
  EXPECT_THROW(CheckPKSP(b, F), Error);
}

TEST(BinomialSaturating, Values) {
  EXPECT_EQ(BinomialSaturating(40, 0), 1);
  EXPECT_EQ(BinomialSaturating(40, 3), 9880);
  EXPECT_EQ(BinomialSaturating(5, 7), 0);
  EXPECT_EQ(BinomialSaturating(200, 100), LLONG_MAX);
}

TEST(BuildAmbiguousObservation, ZeroIsRejected) {
  AmbiguityBasis b = Span({V311111()});
  Eigen::MatrixXd A = Eigen::MatrixXd::Random(8, 6), B = Eigen::MatrixXd::Random(8, 6);
  try {
    BuildAmbiguousObservation(b, Eigen::VectorXd::Zero(6), Sup({0, 1}), A, B);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidCounterexample);
  }
}

// On a toy skeleton where the property fails, the constructed observation
// has two explanations and RF picks the one with the smaller l1 norm.
TEST(BuildAmbiguousObservation, RFPrefersTheOffSupportExplanation) {
  const Skeleton& s = sktest::Toy("toy_limbs12");
  Rng rng(8);
  int strict = 0;
  for (int t = 0; t < 5; ++t) {
    Pose pose = sktest::RandomPose(s, rng);
    SystemMatrices sys = AssembleSystem(s, pose, sktest::Camera());
    AmbiguityBasis b = AmbiguityNullspace(sys.A, sys.B);
    for (int i = 0; i < s.dof(); ++i)
      for (int j = i + 1; j < s.dof(); ++j) {
        Support F = Sup({i, j});
        PkspVerdict v = CheckPKSP(b, F);
        if (v.holds) continue;
        Vec6 z = Vec6::Random() * 0.01;
        AmbiguousObservation ao = BuildAmbiguousObservation(b, *v.counterexample * 0.05, F, sys.A, sys.B, z);
        EXPECT_LT((sys.A * ao.zbar + sys.B * ao.xbar - (sys.A * ao.z + sys.B * ao.x)).norm(), 1e-9);
        for (int q = 0; q < s.dof(); ++q)
          if (!F.contains(q)) EXPECT_EQ(ao.x[q], 0.0);
        if (!(v.margin < -1e-8)) continue;
        ++strict;
        Observation obs = Observation::Zero(sys.visibleCount());
        obs.y = ao.y;
        auto [m, stats] = SolveRF(sys, obs);
        EXPECT_LE(m.omega.lpNorm<1>(), ao.xbar.lpNorm<1>() + 1e-6);
        EXPECT_LT(m.omega.lpNorm<1>(), ao.x.lpNorm<1>());
      }
  }
  EXPECT_GE(strict, 5);
}

}  // namespace
}  // namespace sparsekin
