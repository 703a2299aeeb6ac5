#include "sparsekin/simplex.h"

#include <cmath>
#include <limits>

#include "sparsekin/errors.h"

namespace sparsekin {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kFeasTol = 1e-9;
constexpr double kRatioTol = 1e-12;
constexpr int kDegenerateRunForBland = 30;
constexpr double kDegenerateRatio = 1e-9;

class Tableau {
 public:
  // T is (m + 1) x (n + 1): constraint rows, then objective row (reduced
  // costs for a minimization); last column is the right-hand side.
  Tableau(Eigen::MatrixXd T, std::vector<int> basis) : T_(std::move(T)), basis_(std::move(basis)) {}

  int rows() const { return static_cast<int>(T_.rows()) - 1; }
  int cols() const { return static_cast<int>(T_.cols()) - 1; }
  Eigen::MatrixXd& table() { return T_; }
  std::vector<int>& basis() { return basis_; }

  void pivot(int r, int c) {
    T_.row(r) /= T_(r, c);
    for (int i = 0; i < T_.rows(); ++i) {
      if (i != r && T_(i, c) != 0.0) T_.row(i) -= T_(i, c) * T_.row(r);
    }
    basis_[r] = c;
  }

  // Minimizes the objective row over columns allowed by `usable`.
  LpStatus optimize(const std::vector<bool>& usable, int maxPivots, int& pivots) {
    const int m = rows();
    const int n = cols();
    // Once a long degenerate run is seen, Bland's rule stays on for the rest
    // of the phase: toggling back to Dantzig pricing can cycle through
    // nearly-degenerate pivots that never count as a run.
    int degenerateRun = 0;
    bool bland = false;
    while (pivots < maxPivots) {
      bland = bland || degenerateRun >= kDegenerateRunForBland;
      int enter = -1;
      double best = -kPivotTol;
      for (int j = 0; j < n; ++j) {
        if (!usable[j]) continue;
        const double rc = T_(m, j);
        if (rc < best) {
          enter = j;
          if (bland) break;
          best = rc;
        }
      }
      if (enter < 0) return LpStatus::kOptimal;

      // Two passes: the minimum ratio, then among rows within tolerance of
      // it the largest pivot element (smallest basis index under Bland).
      double ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double a = T_(i, enter);
        if (a > kPivotTol) ratio = std::min(ratio, std::max(T_(i, n), 0.0) / a);
      }
      if (!std::isfinite(ratio)) return LpStatus::kUnbounded;
      int leave = -1;
      for (int i = 0; i < m; ++i) {
        const double a = T_(i, enter);
        if (a <= kPivotTol || std::max(T_(i, n), 0.0) / a > ratio + kRatioTol) continue;
        if (leave < 0 || (bland ? basis_[i] < basis_[leave] : a > T_(leave, enter))) leave = i;
      }
      degenerateRun = ratio < kDegenerateRatio ? degenerateRun + 1 : 0;
      pivot(leave, enter);
      ++pivots;
    }
    return LpStatus::kIterationLimit;
  }

 private:
  Eigen::MatrixXd T_;
  std::vector<int> basis_;
};

}  // namespace

LpResult SolveLp(const LinearProgram& lp, int maxPivots) {
  const int nv = lp.numVars();
  const int meq = static_cast<int>(lp.Aeq.rows());
  const int mub = static_cast<int>(lp.Aub.rows());
  if ((meq > 0 && lp.Aeq.cols() != nv) || (mub > 0 && lp.Aub.cols() != nv) ||
      lp.beq.size() != meq || lp.bub.size() != mub ||
      (!lp.freeVars.empty() && static_cast<int>(lp.freeVars.size()) != nv)) {
    throw Error(ErrorCode::kLpFailure, "linear program dimensions are inconsistent");
  }

  // Standard form columns: one per variable, an extra negative copy for each
  // free variable, one slack per inequality.
  std::vector<int> negCol(nv, -1);
  int n = nv;
  for (int j = 0; j < nv; ++j) {
    if (!lp.freeVars.empty() && lp.freeVars[j]) negCol[j] = n++;
  }
  const int slack0 = n;
  n += mub;
  const int m = meq + mub;
  const int art0 = n;
  const int total = n + m;

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, total + 1);
  auto fillRow = [&](int r, const Eigen::RowVectorXd& a, double b) {
    for (int j = 0; j < nv; ++j) {
      T(r, j) = a[j];
      if (negCol[j] >= 0) T(r, negCol[j]) = -a[j];
    }
    T(r, total) = b;
  };
  for (int i = 0; i < meq; ++i) fillRow(i, lp.Aeq.row(i), lp.beq[i]);
  for (int i = 0; i < mub; ++i) {
    fillRow(meq + i, lp.Aub.row(i), lp.bub[i]);
    T(meq + i, slack0 + i) = 1.0;
  }
  for (int i = 0; i < m; ++i) {
    if (T(i, total) < 0.0) T.row(i) *= -1.0;
    T(i, art0 + i) = 1.0;
  }
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = art0 + i;

  // Phase 1: minimize the sum of artificials.
  for (int i = 0; i < m; ++i) T.row(m) -= T.row(i);
  for (int i = 0; i < m; ++i) T(m, art0 + i) = 0.0;
  Tableau tab(std::move(T), std::move(basis));
  LpResult result;
  std::vector<bool> usable(total, true);
  LpStatus st = tab.optimize(usable, maxPivots, result.pivots);
  if (st == LpStatus::kIterationLimit) {
    result.status = st;
    return result;
  }
  Eigen::MatrixXd& tt = tab.table();
  if (-tt(m, total) > kFeasTol * std::max(1.0, lp.beq.cwiseAbs().sum() + lp.bub.cwiseAbs().sum())) {
    result.status = LpStatus::kInfeasible;
    return result;
  }
  // Drive remaining artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (tab.basis()[i] < art0) continue;
    // Largest pivot: a tiny one here wrecks the tableau for phase 2.
    int c = -1;
    double big = 1e-9;
    for (int j = 0; j < art0; ++j) {
      if (std::abs(tt(i, j)) > big) {
        c = j;
        big = std::abs(tt(i, j));
      }
    }
    if (c >= 0) tab.pivot(i, c);  // otherwise the row is redundant and stays at zero
  }

  // Phase 2 on the original objective (negated: the tableau minimizes).
  for (int j = art0; j < total; ++j) usable[j] = false;
  tt.row(m).setZero();
  for (int j = 0; j < nv; ++j) {
    tt(m, j) = -lp.c[j];
    if (negCol[j] >= 0) tt(m, negCol[j]) = lp.c[j];
  }
  for (int i = 0; i < m; ++i) {
    const int b = tab.basis()[i];
    if (b < art0 && tt(m, b) != 0.0) tt.row(m) -= tt(m, b) * tt.row(i);
  }
  st = tab.optimize(usable, maxPivots, result.pivots);
  result.status = st;
  if (st != LpStatus::kOptimal) return result;

  Eigen::VectorXd xs = Eigen::VectorXd::Zero(total);
  for (int i = 0; i < m; ++i) xs[tab.basis()[i]] = tt(i, total);
  result.x.resize(nv);
  for (int j = 0; j < nv; ++j) result.x[j] = xs[j] - (negCol[j] >= 0 ? xs[negCol[j]] : 0.0);
  result.objective = lp.c.dot(result.x);
  return result;
}

}  // namespace sparsekin
