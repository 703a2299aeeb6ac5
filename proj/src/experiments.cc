#include "sparsekin/experiments.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/SVD>

#include "sparsekin/errors.h"

namespace sparsekin {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

MeanStd Summarize(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - out.mean) * (x - out.mean);
  out.std = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
  return out;
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t cell, std::uint64_t trial) {
  return SplitMix(SplitMix(SplitMix(seed) ^ cell) ^ trial);
}

void TrialConfig::validate(int dof) const {
  if (supportSize < 0 || supportSize > dof) {
    throw Error(ErrorCode::kInvalidArgument, "support size out of range [0, d]");
  }
  if (noiseStdPixels < 0.0 || trials < 1 || !(focalPixels > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid trial configuration");
  }
  if (!(magnitudeMin > 0.0) || magnitudeMin > magnitudeMax || magnitudeMax > 5.0 * kDeg + 1e-15) {
    throw Error(ErrorCode::kInvalidArgument, "magnitude range must satisfy 0 < min <= max <= 5 deg");
  }
}

Support RandomSupport(int dof, int s, Rng& rng) {
  if (s < 0 || s > dof) throw Error(ErrorCode::kInvalidArgument, "support size out of range [0, d]");
  std::vector<int> idx(dof);
  std::iota(idx.begin(), idx.end(), 0);
  for (int k = 0; k < s; ++k) {
    std::uniform_int_distribution<int> pick(k, dof - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  Support out;
  out.indices.assign(idx.begin(), idx.begin() + s);
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

DifferentialMotion GenMotionOnSupport(const Skeleton& skel, const Pose& pose, const Support& support,
                                      Rng& rng, const TrialConfig& cfg) {
  const int d = skel.dof();
  DifferentialMotion m = DifferentialMotion::Zero(d);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < 6; ++k) m.rho[k] = cfg.rigidScale * gauss(rng);

  std::uniform_real_distribution<double> mag(cfg.magnitudeMin, cfg.magnitudeMax);
  std::bernoulli_distribution coin(0.5);
  for (int j : support.indices) {
    const JointSpec& js = skel.joints()[j];
    const double up = js.boundMax - pose.theta[j];
    const double down = pose.theta[j] - js.boundMin;
    double a = mag(rng);
    double sign = coin(rng) ? 1.0 : -1.0;
    double room = sign > 0 ? up : down;
    if (room < a) {
      const double other = sign > 0 ? down : up;
      if (other >= a || other > room) {
        sign = -sign;
        room = other;
      }
    }
    // Bounds at least 2*min wide guarantee room >= min on the better side.
    if (room < cfg.magnitudeMin) {
      throw Error(ErrorCode::kInvalidArgument,
                  "joint '" + js.name + "' has no headroom for the requested motion magnitude");
    }
    m.omega[j] = sign * std::min(a, room);
  }
  return m;
}

DifferentialMotion GenSparseMotion(const Skeleton& skel, const Pose& pose, int s, Rng& rng,
                                   const TrialConfig& cfg) {
  if (s > skel.dof()) throw Error(ErrorCode::kInvalidArgument, "support size exceeds d");
  return GenMotionOnSupport(skel, pose, RandomSupport(skel.dof(), s, rng), rng, cfg);
}

Observation SynthesizeObservation(const SystemMatrices& sys, int numLandmarks,
                                  const DifferentialMotion& motion, double noiseNormalized, Rng& rng) {
  Observation obs;
  obs.y = Eigen::VectorXd::Zero(2 * numLandmarks);
  obs.visible.assign(numLandmarks, false);
  const Eigen::VectorXd clean = sys.A * motion.rho + sys.B * motion.omega;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (size_t k = 0; k < sys.rows.size(); ++k) {
    const int i = sys.rows[k];
    obs.visible[i] = true;
    for (int c = 0; c < 2; ++c) {
      double eta = noiseNormalized > 0.0 ? noiseNormalized * gauss(rng) : 0.0;
      obs.y[2 * i + c] = clean[2 * k + c] + eta;
    }
  }
  return obs;
}

Observation SynthesizeObservation(const Skeleton& skel, const Pose& pose,
                                  const DifferentialMotion& motion, const CameraModel& cam,
                                  double noisePixels, Rng& rng) {
  const SystemMatrices sys = AssembleSystem(skel, pose, cam);
  return SynthesizeObservation(sys, skel.numLandmarks(), motion, noisePixels / cam.focal, rng);
}

SupportMetrics ComputeSupportMetrics(const Eigen::VectorXd& omegaHat, const Eigen::VectorXd& omegaTrue,
                                     double epsilon) {
  if (omegaHat.size() != omegaTrue.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "metric inputs differ in size");
  }
  int tp = 0, tn = 0, fp = 0, fn = 0;
  for (int i = 0; i < omegaHat.size(); ++i) {
    const bool predicted = std::abs(omegaHat[i]) > epsilon;
    const bool actual = std::abs(omegaTrue[i]) > epsilon;
    if (predicted && actual) ++tp;
    else if (!predicted && !actual) ++tn;
    else if (predicted) ++fp;
    else ++fn;
  }
  auto frac = [](int num, int den) { return den == 0 ? 1.0 : static_cast<double>(num) / den; };
  SupportMetrics m;
  m.accuracy = frac(tp + tn, static_cast<int>(omegaHat.size()));
  m.specificity = frac(tn, tn + fp);
  m.sensitivity = frac(tp, tp + fn);
  return m;
}

namespace {

Eigen::Matrix3Xd LandmarkMatrix(const Skeleton& skel, const Pose& pose) {
  const std::vector<Vec3> pts = LandmarkPositions(skel, pose);
  Eigen::Matrix3Xd P(3, pts.size());
  for (size_t i = 0; i < pts.size(); ++i) P.col(i) = pts[i];
  return P;
}

Vec3 RootPosition(const Skeleton& skel, const Pose& pose) {
  const JointSpec& root = skel.joints().front();
  return pose.cameraToRoot * root.offset;
}

}  // namespace

double Mpjpe(const Skeleton& skel, const Pose& poseHat, const Pose& poseTrue) {
  Eigen::Matrix3Xd Ph = LandmarkMatrix(skel, poseHat);
  Eigen::Matrix3Xd Pt = LandmarkMatrix(skel, poseTrue);
  Ph.colwise() -= RootPosition(skel, poseHat);
  Pt.colwise() -= RootPosition(skel, poseTrue);
  return (Ph - Pt).colwise().norm().mean();
}

namespace {

// Rigid (R, t) minimizing sum_i w_i |R a_i + t - b_i|^2.
std::pair<Mat3, Vec3> WeightedKabsch(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b,
                                     const Eigen::VectorXd& w) {
  const double sw = w.sum();
  const Vec3 ca = a * w / sw;
  const Vec3 cb = b * w / sw;
  const Mat3 H = (b.colwise() - cb) * w.asDiagonal() * (a.colwise() - ca).transpose();
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  const Mat3 R = svd.matrixU() * D * svd.matrixV().transpose();
  return {R, cb - R * ca};
}

}  // namespace

double ProcrustesError(const Skeleton& skel, const Pose& poseHat, const Pose& poseTrue) {
  const Eigen::Matrix3Xd Ph = LandmarkMatrix(skel, poseHat);
  const Eigen::Matrix3Xd Pt = LandmarkMatrix(skel, poseTrue);
  const int n = static_cast<int>(Ph.cols());
  auto meanDist = [&](const Mat3& R, const Vec3& t) {
    return ((R * Ph).colwise() + t - Pt).colwise().norm().mean();
  };
  // The reported metric is a mean of distances, which least squares does not
  // minimize; refine by reweighting (Weiszfeld) from the better of the
  // least-squares and root alignments, so the result never exceeds MPJPE.
  auto [R, t] = WeightedKabsch(Ph, Pt, Eigen::VectorXd::Ones(n));
  double best = meanDist(R, t);
  const Vec3 rootShift = RootPosition(skel, poseTrue) - RootPosition(skel, poseHat);
  if (meanDist(Mat3::Identity(), rootShift) < best) {
    R = Mat3::Identity();
    t = rootShift;
    best = meanDist(R, t);
  }
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd d = ((R * Ph).colwise() + t - Pt).colwise().norm().transpose();
    const Eigen::VectorXd w = d.cwiseMax(1e-12).cwiseInverse();
    auto [Rn, tn] = WeightedKabsch(Ph, Pt, w);
    const double val = meanDist(Rn, tn);
    if (!(val < best)) break;
    const bool stalled = best - val <= 1e-14 * std::max(1.0, best);
    R = Rn;
    t = tn;
    best = val;
    if (stalled) break;
  }
  return best;
}

Pose SamplePose(const Skeleton& skel, Rng& rng, const PoseSamplerOptions& opts) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < opts.maxAttempts; ++attempt) {
    Pose pose;
    pose.theta.resize(skel.dof());
    for (const JointSpec& j : skel.joints()) {
      pose.theta[j.id] = j.boundMin + (j.boundMax - j.boundMin) * unit(rng);
    }
    const double yaw = std::numbers::pi * (2.0 * unit(rng) - 1.0);
    RigidTransform T = FrontalCameraToRoot(opts.depth + opts.depthJitter * (2.0 * unit(rng) - 1.0));
    T.rotation = T.rotation * AxisAngle(Vec3::UnitY(), yaw);
    T.translation.x() += opts.lateralJitter * (2.0 * unit(rng) - 1.0);
    T.translation.y() += opts.lateralJitter * (2.0 * unit(rng) - 1.0);
    pose.cameraToRoot = T;

    const std::vector<Vec3> pts = LandmarkPositions(skel, pose);
    bool ok = true;
    for (const Vec3& p : pts) ok = ok && p.z() > opts.minLandmarkDepth;
    if (ok && CollinearityRatio(pts) > 1e-3) return pose;
  }
  throw Error(ErrorCode::kInvalidArgument, "pose sampler exhausted its attempts");
}

namespace {

struct TrialOutput {
  TrialRecord rf;
  TrialRecord l2;
};

TrialOutput RunTrial(const Skeleton& skel, const std::vector<Pose>& poses, const CameraModel& cam,
                     const SweepConfig& cfg, int cell, int s, double delta, int trial) {
  TrialOutput out;
  for (TrialRecord* r : {&out.rf, &out.l2}) {
    r->cell = cell;
    r->trial = trial;
    r->supportSize = s;
    r->noisePixels = delta;
  }
  out.rf.solver = "rf";
  out.l2.solver = "l2";
  try {
    Rng rng(DeriveSeed(cfg.seed, static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(trial)));
    const Pose pose = poses.empty() ? SamplePose(skel, rng, cfg.sampler) : poses[trial % poses.size()];
    std::vector<bool> visible(skel.numLandmarks(), true);
    if (cfg.occludeLandmark) visible.at(*cfg.occludeLandmark) = false;
    const SystemMatrices sys = AssembleSystem(skel, pose, cam, visible);

    TrialConfig tc;
    tc.magnitudeMin = cfg.magnitudeMinDeg * kDeg;
    tc.magnitudeMax = cfg.magnitudeMaxDeg * kDeg;
    tc.rigidScale = cfg.rigidScale;
    tc.focalPixels = cam.focal;

    Support support = RandomSupport(skel.dof(), s, rng);
    bool certified = false;
    if (cfg.certifiedSupportsOnly) {
      const AmbiguityBasis basis = AmbiguityNullspace(sys.A, sys.B);
      for (int a = 0; a < cfg.certifyAttempts; ++a) {
        if (CheckPKSP(basis, support).holds) {
          certified = true;
          break;
        }
        support = RandomSupport(skel.dof(), s, rng);
      }
      if (!certified) throw Error(ErrorCode::kNoFeasibleSupport, "no certified support found");
    }
    const DifferentialMotion truth = GenMotionOnSupport(skel, pose, support, rng, tc);
    const Observation obs = SynthesizeObservation(sys, skel.numLandmarks(), truth, delta / cam.focal, rng);
    const ReducedSystem rs(sys, sys.reduce(obs.y));
    const Pose poseTrue = ApplyMotion(pose, truth);

    auto fill = [&](TrialRecord& r, const DifferentialMotion& est) {
      r.certified = certified;
      r.metrics = ComputeSupportMetrics(est.omega, truth.omega, cfg.supportEpsilon);
      r.omegaErrInf = (est.omega - truth.omega).cwiseAbs().maxCoeff();
      r.rhoErrInf = (est.rho - truth.rho).cwiseAbs().maxCoeff();
      r.mpjpe = Mpjpe(skel, ApplyMotion(pose, est), poseTrue);
    };
    auto [rfMotion, rfStats] = SolveRF(rs, cfg.rf);
    fill(out.rf, rfMotion);
    out.rf.stats = rfStats;
    if (cfg.runL2) fill(out.l2, SolveL2(rs));
  } catch (const Error& e) {
    out.rf.ok = out.l2.ok = false;
    out.rf.error = out.l2.error = e.what();
  }
  return out;
}

}  // namespace

SweepResult RunSweep(const Skeleton& skel, const std::vector<Pose>& poses, const CameraModel& cam,
                     const SweepConfig& cfg, Execution exec) {
  if (cfg.trials < 1 || cfg.supportSizes.empty() || cfg.noisePixels.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "sweep needs trials >= 1 and a non-empty grid");
  }
  for (int s : cfg.supportSizes) {
    if (s < 0 || s > skel.dof()) throw Error(ErrorCode::kInvalidConfig, "support size out of range");
  }
  for (double dlt : cfg.noisePixels) {
    if (!(dlt >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "noise must be non-negative");
  }
  if (cfg.occludeLandmark && (*cfg.occludeLandmark < 0 || *cfg.occludeLandmark >= skel.numLandmarks())) {
    throw Error(ErrorCode::kInvalidConfig, "occluded landmark out of range");
  }
  TrialConfig check;
  check.magnitudeMin = cfg.magnitudeMinDeg * kDeg;
  check.magnitudeMax = cfg.magnitudeMaxDeg * kDeg;
  check.validate(skel.dof());

  struct Cell {
    int s;
    double delta;
  };
  std::vector<Cell> cells;
  for (int s : cfg.supportSizes)
    for (double dlt : cfg.noisePixels) cells.push_back({s, dlt});

  const long long total = static_cast<long long>(cells.size()) * cfg.trials;
  std::vector<TrialOutput> outputs(total);
  auto work = [&](long long q) {
    const int cell = static_cast<int>(q / cfg.trials);
    const int trial = static_cast<int>(q % cfg.trials);
    outputs[q] = RunTrial(skel, poses, cam, cfg, cell, cells[cell].s, cells[cell].delta, trial);
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long q = 0; q < total; ++q) work(q);
  } else {
    for (long long q = 0; q < total; ++q) work(q);
  }

  SweepResult result;
  for (size_t c = 0; c < cells.size(); ++c) {
    std::vector<const char*> solvers{"rf"};
    if (cfg.runL2) solvers.push_back("l2");
    for (const char* solver : solvers) {
      CellSummary sum;
      sum.supportSize = cells[c].s;
      sum.noisePixels = cells[c].delta;
      sum.solver = solver;
      std::vector<double> acc, spec, sens, oe, re, mp;
      for (int t = 0; t < cfg.trials; ++t) {
        const TrialOutput& o = outputs[c * cfg.trials + t];
        const TrialRecord& r = sum.solver == "rf" ? o.rf : o.l2;
        result.trials.push_back(r);
        ++sum.trials;
        if (!r.ok) {
          ++sum.failed;
          continue;
        }
        acc.push_back(r.metrics.accuracy);
        spec.push_back(r.metrics.specificity);
        sens.push_back(r.metrics.sensitivity);
        oe.push_back(r.omegaErrInf);
        re.push_back(r.rhoErrInf);
        mp.push_back(r.mpjpe);
      }
      sum.accuracy = Summarize(acc);
      sum.specificity = Summarize(spec);
      sum.sensitivity = Summarize(sens);
      sum.omegaErrInf = Summarize(oe);
      sum.rhoErrInf = Summarize(re);
      sum.mpjpe = Summarize(mp);
      result.cells.push_back(sum);
    }
  }
  return result;
}

SyntheticSequence GenerateSequence(const Skeleton& skel, const Pose& initPose, const CameraModel& cam,
                                   const SequenceOptions& opts, Rng& rng) {
  SyntheticSequence seq;
  TrialConfig tc;
  tc.magnitudeMin = opts.magnitudeMinDeg * kDeg;
  tc.magnitudeMax = opts.magnitudeMaxDeg * kDeg;
  tc.rigidScale = opts.rigidScale;

  std::vector<int> candidates = opts.candidates;
  if (candidates.empty()) {
    candidates.resize(skel.dof());
    std::iota(candidates.begin(), candidates.end(), 0);
  }
  if (opts.supportSize > static_cast<int>(candidates.size())) {
    throw Error(ErrorCode::kInvalidArgument, "support size exceeds candidate DoFs");
  }

  Pose pose = initPose;
  std::vector<Vec2> uv;
  for (const Vec3& p : LandmarkPositions(skel, pose)) uv.push_back(ProjectPixels(p, cam));
  for (int t = 0; t < opts.frames; ++t) {
    seq.poses.push_back(pose);
    seq.frames.push_back({t, uv});
    if (t + 1 == opts.frames) break;

    const SystemMatrices sys = AssembleSystem(skel, pose, cam);
    Support support;
    bool found = false;
    std::optional<AmbiguityBasis> basis;
    if (opts.certify) basis = AmbiguityNullspace(sys.A, sys.B);
    for (int attempt = 0; attempt < 500 && !found; ++attempt) {
      const Support pick = RandomSupport(static_cast<int>(candidates.size()), opts.supportSize, rng);
      support.indices.clear();
      for (int k : pick.indices) support.indices.push_back(candidates[k]);
      std::sort(support.indices.begin(), support.indices.end());
      found = !opts.certify || CheckPKSP(*basis, support).holds;
    }
    if (!found) throw Error(ErrorCode::kNoFeasibleSupport, "no certified support for sequence frame");

    const DifferentialMotion m = GenMotionOnSupport(skel, pose, support, rng, tc);
    const Eigen::VectorXd dy = sys.A * m.rho + sys.B * m.omega;
    for (int i = 0; i < skel.numLandmarks(); ++i) uv[i] += cam.focal * dy.segment<2>(2 * i);
    seq.motions.push_back(m);
    seq.supports.push_back(support);
    pose = ApplyMotion(pose, m);
  }
  return seq;
}

}  // namespace sparsekin
