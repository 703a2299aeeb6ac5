#include "sparsekin/solvers.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "sparsekin/errors.h"

namespace sparsekin {

namespace {

constexpr double kRigidRankTol = 1e-10;
constexpr double kReducedRankTol = 1e-10;
constexpr double kL0FeasibleTol = 1e-8;

double SoftThreshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}


}  // namespace

const char* SolveStatusName(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIterations: return "max-iterations";
    case SolveStatus::kInfeasibleBox: return "infeasible-box";
  }
  return "unknown";
}

bool Support::contains(int i) const {
  return std::binary_search(indices.begin(), indices.end(), i);
}

Eigen::MatrixXd RigidRangeBasis(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  if (A.rows() < A.cols() || s.size() == 0 || !(s[s.size() - 1] > kRigidRankTol * s[0])) {
    throw Error(ErrorCode::kRankDeficient, "rigid system matrix is rank deficient");
  }
  return svd.matrixU();
}

RigidElimination EliminateRigid(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::VectorXd& y) {
  RigidElimination out;
  out.Q = RigidRangeBasis(A);
  out.Btilde = B - out.Q * (out.Q.transpose() * B);
  out.ytilde = y - out.Q * (out.Q.transpose() * y);
  return out;
}

RigidRecovery RecoverRigid(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& B, const Eigen::VectorXd& omega) {
  RigidRangeBasis(A);
  const Eigen::VectorXd rhs = y - B * omega;
  RigidRecovery r;
  r.rho = A.colPivHouseholderQr().solve(rhs);
  r.residual = (A * r.rho - rhs).norm();
  return r;
}

ReducedSystem::ReducedSystem(const SystemMatrices& sys, const Eigen::VectorXd& yReduced)
    : sys_(sys), y_(yReduced) {
  if (y_.size() != sys.A.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "observation rows do not match the system");
  }
  elim_ = EliminateRigid(sys.A, sys.B, y_);
  const int d = static_cast<int>(sys.B.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(elim_.Btilde, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  int r = 0;
  while (r < s.size() && s[r] > kReducedRankTol * std::max(s[0], 1e-300)) ++r;
  V_ = svd.matrixV().leftCols(r);
  S_ = s.head(r);
  const Eigen::MatrixXd U = svd.matrixU().leftCols(r);
  xln_ = r > 0 ? Eigen::VectorXd(V_ * (U.transpose() * elim_.ytilde).cwiseQuotient(S_))
               : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
}

Eigen::VectorXd ReducedSystem::projectAffine(const Eigen::VectorXd& v) const {
  return v - V_ * (V_.transpose() * v) + xln_;
}

std::pair<DifferentialMotion, SolveStats> SolveRF(const SystemMatrices& sys, const Observation& obs,
                                                  const SolveOptions& opts) {
  return SolveRF(ReducedSystem(sys, sys.reduce(obs.y)), opts);
}

namespace {

// Least squares on the columns in `support`; returns false when the result is
// not an admissible replacement for `reference`.
bool PolishOnSupport(const ReducedSystem& rs, const Eigen::VectorXd& reference,
                     const SolveOptions& opts, Eigen::VectorXd& out) {
  const Eigen::MatrixXd& Bt = rs.elimination().Btilde;
  const Eigen::VectorXd& yt = rs.elimination().ytilde;
  const double peak = reference.cwiseAbs().maxCoeff();
  std::vector<int> idx;
  for (int i = 0; i < reference.size(); ++i) {
    if (std::abs(reference[i]) > 1e-6 * peak) idx.push_back(i);
  }
  if (idx.empty() || static_cast<int>(idx.size()) > rs.rank()) return false;
  Eigen::MatrixXd Bs(Bt.rows(), idx.size());
  for (size_t k = 0; k < idx.size(); ++k) Bs.col(k) = Bt.col(idx[k]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Bs);
  if (qr.rank() < static_cast<int>(idx.size())) return false;
  const Eigen::VectorXd ws = qr.solve(yt);
  if ((Bs * ws - yt).norm() > std::max(opts.primalTol, 1e-12 * yt.norm())) return false;
  Eigen::VectorXd cand = Eigen::VectorXd::Zero(reference.size());
  for (size_t k = 0; k < idx.size(); ++k) {
    const double v = ws[k];
    if (v * reference[idx[k]] <= 0.0) return false;
    if (opts.boxEnabled && std::abs(v) > opts.omegaMax) return false;
    cand[idx[k]] = v;
  }
  if (cand.lpNorm<1>() > reference.lpNorm<1>() + std::max(opts.primalTol, 1e-9 * peak)) return false;
  out = cand;
  return true;
}

}  // namespace

std::pair<DifferentialMotion, SolveStats> SolveRF(const ReducedSystem& rs,
                                                  const SolveOptions& opts) {
  if (!(opts.admmRho > 0.0) || opts.maxIter < 1 || !(opts.primalTol > 0.0) || !(opts.dualTol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid solve options");
  }
  const SystemMatrices& sys = rs.system();
  const int d = static_cast<int>(sys.B.cols());
  SolveStats stats;
  stats.dualCertificate = Eigen::VectorXd::Zero(d);
  DifferentialMotion motion = DifferentialMotion::Zero(d);

  const Eigen::VectorXd& xln = rs.minNormSolution();
  const double scale = xln.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) {
    const RigidRecovery rr = RecoverRigid(sys.A, rs.y(), sys.B, motion.omega);
    motion.rho = rr.rho;
    stats.converged = true;
    return {motion, stats};
  }

  // ADMM on the homogeneous rescaling omega = scale * x, so the shrinkage
  // threshold 1/rho is relative to the data; residuals are reported unscaled.
  const double inv = 1.0 / scale;
  const double t = 1.0 / opts.admmRho;
  const double boxBound = opts.omegaMax * inv;
  const Eigen::MatrixXd& V = rs.rowBasis();
  const Eigen::VectorXd xlnScaled = xln * inv;
  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v - V * (V.transpose() * v) + xlnScaled;
  };

  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd x(d), zPrev(d), xHat(d);
  for (int it = 1; it <= opts.maxIter; ++it) {
    x = project(z - u);
    xHat = opts.relaxation * x + (1.0 - opts.relaxation) * z;
    zPrev = z;
    for (int i = 0; i < d; ++i) {
      double zi = SoftThreshold(xHat[i] + u[i], t);
      if (opts.boxEnabled) zi = std::clamp(zi, -boxBound, boxBound);
      z[i] = zi;
    }
    u += xHat - z;
    stats.iterations = it;
    stats.primalResidual = (x - z).norm() * scale;
    stats.dualResidual = opts.admmRho * (z - zPrev).norm() * scale;
    if (stats.primalResidual <= opts.primalTol && stats.dualResidual <= opts.dualTol) {
      stats.converged = true;
      break;
    }
  }

  Eigen::VectorXd g = opts.admmRho * u;
  stats.dualCertificate = V * (V.transpose() * g);

  Eigen::VectorXd omega = z * scale;
  if (opts.polish && omega.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::VectorXd polished;
    if (PolishOnSupport(rs, omega, opts, polished)) {
      omega = polished;
      stats.polished = true;
      if (!stats.converged) {
        // The polished point is optimal when the dual iterate certifies it.
        const double tol = 1e-6;
        bool ok = stats.dualCertificate.cwiseAbs().maxCoeff() <= 1.0 + tol;
        for (int i = 0; ok && i < d; ++i) {
          if (omega[i] != 0.0) ok = std::abs(stats.dualCertificate[i] - (omega[i] > 0 ? 1.0 : -1.0)) <= tol;
        }
        stats.converged = ok;
      }
    }
  }
  if (!stats.converged) {
    stats.status = (opts.boxEnabled && stats.primalResidual > 1e2 * opts.primalTol)
                       ? SolveStatus::kInfeasibleBox
                       : SolveStatus::kMaxIterations;
  }

  motion.omega = omega;
  motion.rho = RecoverRigid(sys.A, rs.y(), sys.B, omega).rho;
  stats.objective = omega.lpNorm<1>();
  return {motion, stats};
}

DifferentialMotion SolveL2(const SystemMatrices& sys, const Observation& obs) {
  return SolveL2(ReducedSystem(sys, sys.reduce(obs.y)));
}

DifferentialMotion SolveL2(const ReducedSystem& rs) {
  DifferentialMotion m;
  m.omega = rs.minNormSolution();
  m.rho = RecoverRigid(rs.system().A, rs.y(), rs.system().B, m.omega).rho;
  return m;
}

std::pair<DifferentialMotion, Support> SolveL0Oracle(const SystemMatrices& sys,
                                                     const Observation& obs, int sMax) {
  return SolveL0Oracle(ReducedSystem(sys, sys.reduce(obs.y)), sMax);
}

std::pair<DifferentialMotion, Support> SolveL0Oracle(const ReducedSystem& rs, int sMax) {
  const SystemMatrices& sys = rs.system();
  const int d = static_cast<int>(sys.B.cols());
  if (sMax < 0) throw Error(ErrorCode::kInvalidArgument, "sMax must be non-negative");
  sMax = std::min(sMax, d);
  if (!(sMax <= 4 || d <= 16)) {
    throw Error(ErrorCode::kBudgetExceeded,
                "l0 enumeration over d=" + std::to_string(d) + ", s<=" + std::to_string(sMax) +
                    " exceeds the enumeration budget");
  }
  const Eigen::MatrixXd& Bt = rs.elimination().Btilde;
  const Eigen::VectorXd& yt = rs.elimination().ytilde;
  const double tol = kL0FeasibleTol * rs.y().norm();

  Support support;
  DifferentialMotion motion = DifferentialMotion::Zero(d);
  if (yt.norm() <= tol) {
    motion.rho = RecoverRigid(sys.A, rs.y(), sys.B, motion.omega).rho;
    return {motion, support};
  }
  // The smallest feasible cardinality is rarely attained by one support alone
  // when there are few measurements; among those that attain it, keep the
  // smallest l1 norm, then the lexicographically first.
  for (int s = 1; s <= sMax; ++s) {
    std::vector<int> idx(s);
    for (int k = 0; k < s; ++k) idx[k] = k;
    bool found = false;
    double bestL1 = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best;
    while (true) {
      Eigen::MatrixXd Bs(Bt.rows(), s);
      for (int k = 0; k < s; ++k) Bs.col(k) = Bt.col(idx[k]);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Bs);
      const Eigen::VectorXd ws = qr.solve(yt);
      if ((Bs * ws - yt).norm() <= tol) {
        const double l1 = ws.lpNorm<1>();
        if (!found || l1 < bestL1 * (1.0 - 1e-12)) {
          found = true;
          bestL1 = l1;
          best = ws;
          support.indices = idx;
        }
      }
      // next combination in lexicographic order
      int k = s - 1;
      while (k >= 0 && idx[k] == d - s + k) --k;
      if (k < 0) break;
      ++idx[k];
      for (int m = k + 1; m < s; ++m) idx[m] = idx[m - 1] + 1;
    }
    if (found) {
      for (int k = 0; k < s; ++k) motion.omega[support.indices[k]] = best[k];
      motion.rho = RecoverRigid(sys.A, rs.y(), sys.B, motion.omega).rho;
      return {motion, support};
    }
  }
  throw Error(ErrorCode::kNoFeasibleSupport,
              "no support of size <= " + std::to_string(sMax) + " explains the observation");
}

Support ExtractSupport(const Eigen::VectorXd& omega, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "support epsilon must be positive");
  Support s;
  s.epsilon = epsilon;
  for (int i = 0; i < omega.size(); ++i) {
    if (std::abs(omega[i]) > epsilon) s.indices.push_back(i);
  }
  return s;
}

Pose ApplyMotion(const Pose& pose, const DifferentialMotion& motion) {
  if (motion.omega.size() != pose.theta.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "motion and pose dimensions differ");
  }
  Pose out;
  out.theta = pose.theta + motion.omega;
  out.cameraToRoot = ExpTwist(motion.rigidTwist(), 1.0) * pose.cameraToRoot;
  return out;
}

}  // namespace sparsekin
