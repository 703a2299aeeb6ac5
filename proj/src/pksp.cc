#include "sparsekin/pksp.h"

#include <algorithm>
#include <climits>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "sparsekin/errors.h"
#include "sparsekin/simplex.h"

namespace sparsekin {

namespace {

constexpr double kTieTol = 1e-12;

std::vector<bool> Membership(const Support& F, int d) {
  std::vector<bool> in(d, false);
  for (int i : F.indices) {
    if (i < 0 || i >= d) throw Error(ErrorCode::kInvalidArgument, "support index out of range");
    in[i] = true;
  }
  return in;
}

// max sum_F u_q - sum(a + b) over u, a, b >= 0 with v_F = sigma u,
// v_Fbar = a - b, W^T v = 0 (v orthogonal to the row space, i.e. v in
// range(Z)) and sum u + sum(a + b) = 1. Every column carries a +1 in the
// normalization row, so the feasible set is a bounded polytope.
struct SignPatternLp {
  bool feasible = false;
  double optimum = -1.0;
  Eigen::VectorXd v;
};

SignPatternLp SolveSignPattern(const Eigen::MatrixXd& W, const std::vector<int>& inF,
                               const std::vector<int>& outF, const std::vector<double>& sigma) {
  const int r = static_cast<int>(W.cols());
  const int nf = static_cast<int>(inF.size());
  const int m = static_cast<int>(outF.size());
  const int nv = nf + 2 * m;
  LinearProgram lp;
  lp.Aeq = Eigen::MatrixXd::Zero(r + 1, nv);
  lp.beq = Eigen::VectorXd::Zero(r + 1);
  for (int q = 0; q < nf; ++q) lp.Aeq.col(q).head(r) = sigma[q] * W.row(inF[q]).transpose();
  for (int j = 0; j < m; ++j) {
    lp.Aeq.col(nf + j).head(r) = W.row(outF[j]).transpose();
    lp.Aeq.col(nf + m + j).head(r) = -W.row(outF[j]).transpose();
  }
  lp.Aeq.row(r).setOnes();
  lp.beq[r] = 1.0;
  lp.c = Eigen::VectorXd::Constant(nv, -1.0);
  lp.c.head(nf).setOnes();

  const LpResult res = SolveLp(lp);
  SignPatternLp out;
  if (res.status == LpStatus::kInfeasible) return out;
  if (res.status != LpStatus::kOptimal) {
    throw Error(ErrorCode::kLpFailure,
                std::string("sign-pattern LP stopped without an optimum (") +
                    (res.status == LpStatus::kUnbounded ? "unbounded" : "pivot limit") + ")");
  }
  out.feasible = true;
  out.optimum = res.objective;
  out.v = Eigen::VectorXd::Zero(W.rows());
  for (int q = 0; q < nf; ++q) out.v[inF[q]] = sigma[q] * res.x[q];
  for (int j = 0; j < m; ++j) out.v[outF[j]] = res.x[nf + j] - res.x[nf + m + j];
  return out;
}

// Orthonormal complement of range(Z) in R^d.
Eigen::MatrixXd Complement(const Eigen::MatrixXd& Z) {
  const int d = static_cast<int>(Z.rows());
  const int k = static_cast<int>(Z.cols());
  if (k == 0) return Eigen::MatrixXd::Identity(d, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  return Q.rightCols(d - k);
}

PkspVerdict VacuousVerdict(PkspMode mode) {
  PkspVerdict v;
  v.mode = mode;
  v.holds = true;
  v.margin = 1.0;
  return v;
}

// f(v) = (||v_F||_1 - ||v_Fbar||_1) / ||v||_1, with F either fixed or the
// s largest-magnitude coordinates of v.
class ViolationObjective {
 public:
  ViolationObjective(const Eigen::MatrixXd& Z, std::vector<bool> inF)
      : Z_(Z), inF_(std::move(inF)), order_(-1) {}
  ViolationObjective(const Eigen::MatrixXd& Z, int order) : Z_(Z), order_(order) {}

  double value(const Eigen::VectorXd& c) const {
    Eigen::VectorXd v = Z_ * c;
    std::vector<bool> in = support(v);
    return ratio(v, in);
  }

  // Local ascent on the unit sphere with backtracking steps.
  Eigen::VectorXd ascend(Eigen::VectorXd c, int steps) const {
    c.normalize();
    double f = value(c);
    double eta = 0.5;
    for (int it = 0; it < steps && eta > 1e-8; ++it) {
      const Eigen::VectorXd v = Z_ * c;
      const std::vector<bool> in = support(v);
      const double D = v.lpNorm<1>();
      if (D <= 0.0) break;
      double N = 0.0;
      for (int i = 0; i < v.size(); ++i) N += (in[i] ? 1.0 : -1.0) * std::abs(v[i]);
      Eigen::VectorXd g(v.size());
      for (int i = 0; i < v.size(); ++i) {
        const double s = v[i] > 0 ? 1.0 : (v[i] < 0 ? -1.0 : 0.0);
        g[i] = s * ((in[i] ? 1.0 : -1.0) * D - N) / (D * D);
      }
      Eigen::VectorXd grad = Z_.transpose() * g;
      grad -= grad.dot(c) * c;
      if (grad.norm() < 1e-14) break;
      bool improved = false;
      while (eta > 1e-8) {
        Eigen::VectorXd trial = (c + eta * grad.normalized()).normalized();
        const double ft = value(trial);
        if (ft > f) {
          c = trial;
          f = ft;
          eta *= 1.5;
          improved = true;
          break;
        }
        eta *= 0.5;
      }
      if (!improved) break;
    }
    return c;
  }

  std::vector<bool> support(const Eigen::VectorXd& v) const {
    if (order_ < 0) return inF_;
    return TopS(v, order_);
  }

  static std::vector<bool> TopS(const Eigen::VectorXd& v, int s) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return std::abs(v[a]) > std::abs(v[b]); });
    std::vector<bool> in(v.size(), false);
    for (int q = 0; q < s && q < static_cast<int>(idx.size()); ++q) in[idx[q]] = true;
    return in;
  }

  static double ratio(const Eigen::VectorXd& v, const std::vector<bool>& in) {
    const double D = v.lpNorm<1>();
    if (D <= 0.0) return -1.0;
    double N = 0.0;
    for (int i = 0; i < v.size(); ++i) N += (in[i] ? 1.0 : -1.0) * std::abs(v[i]);
    return N / D;
  }

 private:
  const Eigen::MatrixXd& Z_;
  std::vector<bool> inF_;
  int order_;
};

PkspVerdict RandomizedSearch(const ViolationObjective& obj, int k, long long budget,
                             std::uint64_t seed) {
  PkspVerdict verdict;
  verdict.mode = PkspMode::kRandomized;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd bestC;
  for (long long t = 0; t < budget; ++t) {
    Eigen::VectorXd c(k);
    for (int j = 0; j < k; ++j) c[j] = gauss(rng);
    c = obj.ascend(c, 60);
    const double f = obj.value(c);
    if (f > best) {
      best = f;
      bestC = c;
    }
  }
  verdict.margin = -best;
  verdict.holds = best < -kTieTol;
  if (!verdict.holds) {
    verdict.counterexample = bestC;  // converted to omega space by the caller
  }
  return verdict;
}

}  // namespace

const char* PkspModeName(PkspMode m) { return m == PkspMode::kExact ? "exact" : "randomized"; }

long long BinomialSaturating(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > static_cast<long double>(LLONG_MAX) / 4) return LLONG_MAX;
  }
  return static_cast<long long>(std::llround(r));
}

double SupportMargin(const Eigen::VectorXd& v, const Support& F) {
  return -ViolationObjective::ratio(v, Membership(F, static_cast<int>(v.size())));
}

AmbiguityBasis AmbiguityNullspace(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  double rankTol) {
  const Eigen::MatrixXd Q = RigidRangeBasis(A);
  const Eigen::MatrixXd Bt = B - Q * (Q.transpose() * B);
  const int d = static_cast<int>(B.cols());
  AmbiguityBasis basis;
  basis.rankTol = rankTol;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Bt, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  const double cut = rankTol * smax;
  int r = 0;
  while (r < s.size() && s[r] > cut && s[r] > 0.0) ++r;
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] > cut * 1e-2 && s[i] < cut * 1e2) basis.nearRankThreshold = true;
  }
  basis.Z = svd.matrixV().rightCols(d - r);
  return basis;
}

PkspVerdict CheckPKSP(const AmbiguityBasis& basis, const Support& F, PkspMode mode, long long budget,
                      std::uint64_t seed) {
  const int d = basis.dof();
  const std::vector<bool> in = Membership(F, d);
  if (basis.dim() == 0) return VacuousVerdict(mode);
  if (F.indices.empty()) {
    PkspVerdict v = VacuousVerdict(mode);
    return v;
  }

  if (mode == PkspMode::kRandomized) {
    ViolationObjective obj(basis.Z, in);
    PkspVerdict v = RandomizedSearch(obj, basis.dim(), std::max(1LL, budget), seed);
    if (v.counterexample) v.counterexample = Eigen::VectorXd(basis.Z * *v.counterexample);
    return v;
  }

  const int nf = F.size();
  if (nf > kExactMaxSupport || (1LL << nf) > budget) {
    throw Error(ErrorCode::kBudgetExceeded, "exact PKSP check over |F|=" + std::to_string(nf) +
                                                " needs 2^" + std::to_string(nf) +
                                                " sign patterns, over budget");
  }
  const Eigen::MatrixXd W = Complement(basis.Z);
  std::vector<int> inF = F.indices;
  std::vector<int> outF;
  for (int i = 0; i < d; ++i)
    if (!in[i]) outF.push_back(i);

  // sigma and -sigma give mirrored programs (v -> -v); fix sigma_0 = +1.
  PkspVerdict verdict;
  verdict.mode = PkspMode::kExact;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> sigma(nf);
  const long long patterns = 1LL << (nf - 1);
  for (long long mask = 0; mask < patterns; ++mask) {
    sigma[0] = 1.0;
    for (int q = 1; q < nf; ++q) sigma[q] = (mask >> (q - 1)) & 1 ? -1.0 : 1.0;
    const SignPatternLp res = SolveSignPattern(W, inF, outF, sigma);
    ++verdict.linearPrograms;
    if (!res.feasible) continue;
    if (res.optimum > best) {
      best = res.optimum;
      if (best >= -kTieTol) verdict.counterexample = res.v;
    }
  }
  if (!std::isfinite(best)) {
    // Every pattern infeasible cannot happen for k >= 1 (some v has a
    // consistent sign on F); treat as solver failure.
    throw Error(ErrorCode::kLpFailure, "all sign-pattern LPs infeasible");
  }
  verdict.margin = -best;
  verdict.holds = verdict.margin > kTieTol;
  if (verdict.holds) verdict.counterexample.reset();
  return verdict;
}

namespace {

bool NextCombination(std::vector<int>& idx, int n) {
  const int s = static_cast<int>(idx.size());
  int k = s - 1;
  while (k >= 0 && idx[k] == n - s + k) --k;
  if (k < 0) return false;
  ++idx[k];
  for (int m = k + 1; m < s; ++m) idx[m] = idx[m - 1] + 1;
  return true;
}

std::vector<Support> AllSupports(int d, int s) {
  std::vector<Support> all;
  std::vector<int> idx(s);
  std::iota(idx.begin(), idx.end(), 0);
  do {
    Support F;
    F.indices = idx;
    all.push_back(F);
  } while (NextCombination(idx, d));
  return all;
}

}  // namespace

std::pair<PkspVerdict, Support> CheckPKSPOrder(const AmbiguityBasis& basis, int s, PkspMode mode,
                                               long long budget, std::uint64_t seed,
                                               Execution exec) {
  const int d = basis.dof();
  if (s < 0 || s > d) throw Error(ErrorCode::kInvalidArgument, "order out of range");
  if (s == 0 || basis.dim() == 0) return {VacuousVerdict(mode), Support{}};

  if (mode == PkspMode::kRandomized) {
    ViolationObjective obj(basis.Z, s);
    PkspVerdict v = RandomizedSearch(obj, basis.dim(), std::max(1LL, budget), seed);
    Support worst;
    Eigen::VectorXd c = v.counterexample ? *v.counterexample : Eigen::VectorXd();
    if (v.counterexample) {
      Eigen::VectorXd omega = basis.Z * c;
      const std::vector<bool> in = ViolationObjective::TopS(omega, s);
      for (int i = 0; i < d; ++i)
        if (in[i]) worst.indices.push_back(i);
      v.counterexample = omega;
    }
    return {v, worst};
  }

  if (s > kExactMaxSupport) {
    throw Error(ErrorCode::kBudgetExceeded, "exact order-" + std::to_string(s) + " check over budget");
  }
  const long long supports = BinomialSaturating(d, s);
  if (supports == LLONG_MAX || supports > budget / (1LL << s)) {
    throw Error(ErrorCode::kBudgetExceeded,
                "exact order-" + std::to_string(s) + " check needs C(" + std::to_string(d) + "," +
                    std::to_string(s) + ")*2^" + std::to_string(s) + " programs, over budget " +
                    std::to_string(budget));
  }

  if (basis.dim() == 1) {
    // A single ambiguous ray: the least favourable support is its s largest
    // coordinates, so one support decides the order.
    const std::vector<bool> in = ViolationObjective::TopS(basis.Z.col(0), s);
    Support worst;
    for (int i = 0; i < d; ++i)
      if (in[i]) worst.indices.push_back(i);
    return {CheckPKSP(basis, worst, PkspMode::kExact, 1LL << s, seed), worst};
  }

  const std::vector<Support> all = AllSupports(d, s);
  const long long count = static_cast<long long>(all.size());
  std::vector<PkspVerdict> verdicts(count);
  if (exec == Execution::kParallel) {
    bool failed = false;
    std::string failure;
#pragma omp parallel for schedule(dynamic, 4)
    for (long long q = 0; q < count; ++q) {
      try {
        verdicts[q] = CheckPKSP(basis, all[q], PkspMode::kExact, 1LL << s, seed);
      } catch (const Error& e) {
#pragma omp critical
        {
          failed = true;
          failure = e.what();
        }
      }
    }
    if (failed) throw Error(ErrorCode::kLpFailure, failure);
  } else {
    for (long long q = 0; q < count; ++q) {
      verdicts[q] = CheckPKSP(basis, all[q], PkspMode::kExact, 1LL << s, seed);
    }
  }

  long long worstIdx = 0;
  long long lps = 0;
  bool holds = true;
  for (long long q = 0; q < count; ++q) {
    lps += verdicts[q].linearPrograms;
    holds = holds && verdicts[q].holds;
    if (verdicts[q].margin < verdicts[worstIdx].margin) worstIdx = q;
  }
  PkspVerdict out = verdicts[worstIdx];
  out.holds = holds;
  out.linearPrograms = lps;
  return {out, all[worstIdx]};
}

AmbiguousObservation BuildAmbiguousObservation(const AmbiguityBasis& basis,
                                               const Eigen::VectorXd& v, const Support& F,
                                               const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                               const Vec6& z) {
  const int d = basis.dof();
  if (v.size() != d) throw Error(ErrorCode::kInvalidCounterexample, "counterexample has wrong size");
  const double nv = v.norm();
  if (!(nv > 1e-12)) throw Error(ErrorCode::kInvalidCounterexample, "counterexample is zero");
  if (basis.dim() == 0 || (v - basis.Z * (basis.Z.transpose() * v)).norm() > 1e-9 * std::max(1.0, nv)) {
    throw Error(ErrorCode::kInvalidCounterexample, "counterexample is not in the ambiguity space");
  }
  const std::vector<bool> in = Membership(F, d);
  AmbiguousObservation out;
  out.x = Eigen::VectorXd::Zero(d);
  out.xbar = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    if (in[i]) out.x[i] = v[i];
    else out.xbar[i] = -v[i];
  }
  if (out.x.lpNorm<1>() < out.xbar.lpNorm<1>() - 1e-9 * v.lpNorm<1>()) {
    throw Error(ErrorCode::kInvalidCounterexample,
                "counterexample does not violate the property on this support");
  }
  // B (x - xbar) = B v lies in span(A); zbar absorbs it.
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(B * v);
  out.z = z;
  out.zbar = z + c;
  out.y = A * out.z + B * out.x;
  return out;
}

}  // namespace sparsekin
