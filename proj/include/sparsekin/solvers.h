#pragma once

#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sparsekin/camera.h"
#include "sparsekin/kinematics.h"
#include "sparsekin/liegroup.h"

namespace sparsekin {

inline constexpr double kDefaultOmegaMax = 5.0 * std::numbers::pi / 180.0;
inline constexpr double kDefaultSupportEpsilon = 1e-4;

struct DifferentialMotion {
  Vec6 rho = Vec6::Zero();        // (v, w): translation then rotation rates
  Eigen::VectorXd omega;          // articulated rates, rad per frame

  static DifferentialMotion Zero(int dof) { return {Vec6::Zero(), Eigen::VectorXd::Zero(dof)}; }
  // Camera-frame twist generating p_dot = w x p + v.
  Twist rigidTwist() const { return {rho.tail<3>(), rho.head<3>()}; }
};

struct SolveOptions {
  double admmRho = 1.0;
  int maxIter = 10000;
  double primalTol = 1e-9;
  double dualTol = 1e-9;
  double omegaMax = kDefaultOmegaMax;
  bool boxEnabled = false;
  // Finish with a least-squares solve on the detected support, accepted only
  // when it stays feasible, sign-consistent and no worse in l1.
  bool polish = true;
  double relaxation = 1.6;

  static SolveOptions Exact() { return {}; }
  static SolveOptions Tracking() {
    SolveOptions o;
    o.primalTol = o.dualTol = 1e-6;
    o.maxIter = 2000;
    o.boxEnabled = true;
    return o;
  }
};

enum class SolveStatus { kConverged, kMaxIterations, kInfeasibleBox };
const char* SolveStatusName(SolveStatus s);

struct SolveStats {
  int iterations = 0;
  double primalResidual = 0.0;
  double dualResidual = 0.0;
  double objective = 0.0;   // ||omega||_1
  bool converged = false;
  bool polished = false;
  SolveStatus status = SolveStatus::kConverged;
  // Btilde^T lambda from the final ADMM dual iterate; at an l1 optimum it is
  // a subgradient of ||.||_1 at omega.
  Eigen::VectorXd dualCertificate;
};

struct Support {
  std::vector<int> indices;
  double epsilon = kDefaultSupportEpsilon;

  int size() const { return static_cast<int>(indices.size()); }
  bool contains(int i) const;
  bool operator==(const Support& o) const { return indices == o.indices; }
};

struct RigidElimination {
  Eigen::MatrixXd Btilde;   // (I - QQ^T) B
  Eigen::VectorXd ytilde;   // (I - QQ^T) y
  Eigen::MatrixXd Q;        // orthonormal basis of span(A)
};

// Orthonormal basis of span(A); throws kRankDeficient unless rank(A) = cols.
Eigen::MatrixXd RigidRangeBasis(const Eigen::MatrixXd& A);

RigidElimination EliminateRigid(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::VectorXd& y);

struct RigidRecovery {
  Vec6 rho;
  double residual;  // ||A rho - (y - B omega)||_2
};
RigidRecovery RecoverRigid(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& B, const Eigen::VectorXd& omega);

// Frame-level factorization shared by the solvers: rigid elimination plus the
// thin SVD of Btilde.
class ReducedSystem {
 public:
  ReducedSystem(const SystemMatrices& sys, const Eigen::VectorXd& yReduced);

  const SystemMatrices& system() const { return sys_; }
  const Eigen::VectorXd& y() const { return y_; }
  const RigidElimination& elimination() const { return elim_; }
  int rank() const { return static_cast<int>(S_.size()); }
  // Minimum-norm solution of Btilde omega = ytilde (least squares if infeasible).
  const Eigen::VectorXd& minNormSolution() const { return xln_; }
  // Orthonormal basis of the row space of Btilde (d x rank).
  const Eigen::MatrixXd& rowBasis() const { return V_; }
  // Projects v onto {omega : Btilde omega = Btilde xln}.
  Eigen::VectorXd projectAffine(const Eigen::VectorXd& v) const;

 private:
  SystemMatrices sys_;
  Eigen::VectorXd y_;
  RigidElimination elim_;
  Eigen::MatrixXd V_;
  Eigen::VectorXd S_;
  Eigen::VectorXd xln_;
};

// min ||omega||_1 s.t. y = A rho + B omega, optionally |omega_i| <= omegaMax.
std::pair<DifferentialMotion, SolveStats> SolveRF(const SystemMatrices& sys, const Observation& obs,
                                                  const SolveOptions& opts = {});
std::pair<DifferentialMotion, SolveStats> SolveRF(const ReducedSystem& reduced,
                                                  const SolveOptions& opts = {});

// min ||omega||_2 under the same constraint, closed form.
DifferentialMotion SolveL2(const SystemMatrices& sys, const Observation& obs);
DifferentialMotion SolveL2(const ReducedSystem& reduced);

// Exhaustive min ||omega||_0 over supports of size <= sMax. Ties in cardinality go
// to the smallest l1 norm, then to the lexicographically first support.
std::pair<DifferentialMotion, Support> SolveL0Oracle(const SystemMatrices& sys,
                                                     const Observation& obs, int sMax);
std::pair<DifferentialMotion, Support> SolveL0Oracle(const ReducedSystem& reduced, int sMax);

Support ExtractSupport(const Eigen::VectorXd& omega, double epsilon = kDefaultSupportEpsilon);

// First-order update: theta += omega, T_c <- exp(rho) T_c. No clamping.
Pose ApplyMotion(const Pose& pose, const DifferentialMotion& motion);

}  // namespace sparsekin
