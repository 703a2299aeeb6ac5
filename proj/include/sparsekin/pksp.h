#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Core>

#include "sparsekin/solvers.h"

namespace sparsekin {

inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr int kExactMaxSupport = 12;

// Directions omega with M J omega in span(M Gamma): the kernel of
// (I - QQ^T) B, as orthonormal columns.
struct AmbiguityBasis {
  Eigen::MatrixXd Z;   // d x k
  double rankTol = kDefaultRankTol;
  // Set when a singular value falls within two decades of the rank cut; the
  // property is discontinuous there.
  bool nearRankThreshold = false;

  int dim() const { return static_cast<int>(Z.cols()); }
  int dof() const { return static_cast<int>(Z.rows()); }
};

enum class PkspMode { kExact, kRandomized };
const char* PkspModeName(PkspMode m);

struct PkspVerdict {
  bool holds = true;
  // min over nonzero v in range(Z), ||v||_1 = 1, of ||v_Fbar||_1 - ||v_F||_1.
  // Randomized mode reports the smallest value it observed.
  double margin = 1.0;
  std::optional<Eigen::VectorXd> counterexample;
  PkspMode mode = PkspMode::kExact;
  long long linearPrograms = 0;
};

enum class Execution { kSerial, kParallel };

AmbiguityBasis AmbiguityNullspace(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  double rankTol = kDefaultRankTol);

// Property relative to a single support F. Exact mode solves one LP per sign
// pattern on F; `budget` caps the number of sign patterns (exact) or random
// probes (randomized).
PkspVerdict CheckPKSP(const AmbiguityBasis& basis, const Support& F, PkspMode mode = PkspMode::kExact,
                      long long budget = 4096, std::uint64_t seed = 0x5eedULL);

// Property of order s: relative to every support of size s.
std::pair<PkspVerdict, Support> CheckPKSPOrder(const AmbiguityBasis& basis, int s,
                                               PkspMode mode = PkspMode::kExact,
                                               long long budget = 1000000,
                                               std::uint64_t seed = 0x5eedULL,
                                               Execution exec = Execution::kParallel);

// ||v_Fbar||_1 - ||v_F||_1 after l1 normalization.
double SupportMargin(const Eigen::VectorXd& v, const Support& F);

struct AmbiguousObservation {
  Eigen::VectorXd y;      // shared observation A z + B x
  Eigen::VectorXd x;      // v_F
  Eigen::VectorXd xbar;   // -v_Fbar
  Vec6 z = Vec6::Zero();
  Vec6 zbar = Vec6::Zero();
};

// Two decompositions A zbar + B xbar = A z + B x of one observation, with x
// supported on F and ||xbar||_1 <= ||x||_1.
AmbiguousObservation BuildAmbiguousObservation(const AmbiguityBasis& basis,
                                               const Eigen::VectorXd& counterexample,
                                               const Support& F, const Eigen::MatrixXd& A,
                                               const Eigen::MatrixXd& B,
                                               const Vec6& z = Vec6::Zero());

// Number of k-subsets of n, saturating at LLONG_MAX.
long long BinomialSaturating(int n, int k);

}  // namespace sparsekin
