#pragma once

#include <vector>

#include <Eigen/Core>

namespace sparsekin {

// Dense linear program
//   maximize    c^T x
//   subject to  Aeq x  = beq
//               Aub x <= bub
//               x_j >= 0 unless freeVars[j]
struct LinearProgram {
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd Aub;
  Eigen::VectorXd bub;
  Eigen::VectorXd c;
  std::vector<bool> freeVars;

  int numVars() const { return static_cast<int>(c.size()); }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  Eigen::VectorXd x;
  double objective = 0.0;
  int pivots = 0;
};

// Two-phase tableau simplex. Dantzig pricing with a switch to Bland's rule
// after a run of degenerate pivots, so it terminates on degenerate problems.
LpResult SolveLp(const LinearProgram& lp, int maxPivots = 20000);

}  // namespace sparsekin
