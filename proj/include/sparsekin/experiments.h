#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparsekin/camera.h"
#include "sparsekin/kinematics.h"
#include "sparsekin/pksp.h"
#include "sparsekin/solvers.h"

namespace sparsekin {

using Rng = std::mt19937_64;

// Independent stream for (seed, cell, trial); identical for serial and
// parallel execution.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t cell, std::uint64_t trial);

struct TrialConfig {
  int supportSize = 3;
  double noiseStdPixels = 0.0;
  double focalPixels = 1145.0;
  int trials = 1;
  std::uint64_t rngSeed = 1;
  double magnitudeMin = 0.5 * std::numbers::pi / 180.0;  // rad
  double magnitudeMax = 5.0 * std::numbers::pi / 180.0;  // rad
  double rigidScale = 0.01;
  void validate(int dof) const;
};

struct SupportMetrics {
  double accuracy = 1.0;
  double specificity = 1.0;
  double sensitivity = 1.0;
};

// Sparse articulated motion with a uniformly drawn support of size s, keeping
// theta + omega inside the joint bounds; dense Gaussian rigid motion.
DifferentialMotion GenSparseMotion(const Skeleton& skel, const Pose& pose, int s, Rng& rng,
                                   const TrialConfig& cfg);
// Same, on a prescribed support.
DifferentialMotion GenMotionOnSupport(const Skeleton& skel, const Pose& pose, const Support& support,
                                      Rng& rng, const TrialConfig& cfg);
Support RandomSupport(int dof, int s, Rng& rng);

// y = A rho + B omega + eta, eta ~ N(0, (delta/focal)^2) per coordinate.
Observation SynthesizeObservation(const Skeleton& skel, const Pose& pose,
                                  const DifferentialMotion& motion, const CameraModel& cam,
                                  double noisePixels, Rng& rng);
Observation SynthesizeObservation(const SystemMatrices& sys, int numLandmarks,
                                  const DifferentialMotion& motion, double noiseNormalized, Rng& rng);

// Positive class = nonzero motion (|.| > epsilon). 0/0 counts as 1.
SupportMetrics ComputeSupportMetrics(const Eigen::VectorXd& omegaHat, const Eigen::VectorXd& omegaTrue,
                                     double epsilon = kDefaultSupportEpsilon);

// Mean landmark distance after translating both skeletons so their roots coincide.
double Mpjpe(const Skeleton& skel, const Pose& poseHat, const Pose& poseTrue);
// Mean landmark distance after the rigid alignment of poseHat onto poseTrue that
// minimizes that mean.
double ProcrustesError(const Skeleton& skel, const Pose& poseHat, const Pose& poseTrue);

struct PoseSamplerOptions {
  double depth = 3.0;
  double depthJitter = 0.5;
  double lateralJitter = 0.2;
  double minLandmarkDepth = 0.5;
  int maxAttempts = 1000;
};

// Angles uniform within bounds, random body yaw about the vertical, rejected
// until every landmark is deeper than minLandmarkDepth and they are not collinear.
Pose SamplePose(const Skeleton& skel, Rng& rng, const PoseSamplerOptions& opts = {});

struct SweepConfig {
  std::vector<int> supportSizes{3};
  std::vector<double> noisePixels{0.0};
  int trials = 10;
  std::uint64_t seed = 1;
  double magnitudeMinDeg = 0.5;
  double magnitudeMaxDeg = 5.0;
  double rigidScale = 0.01;
  bool runL2 = true;
  // Resample supports until the exact property holds (bounded attempts).
  bool certifiedSupportsOnly = false;
  int certifyAttempts = 200;
  // Landmark dropped from every frame, per the joint-occlusion study.
  std::optional<int> occludeLandmark;
  double supportEpsilon = kDefaultSupportEpsilon;
  SolveOptions rf = SolveOptions::Exact();
  PoseSamplerOptions sampler;
};

struct TrialRecord {
  int cell = 0;
  int trial = 0;
  int supportSize = 0;
  double noisePixels = 0.0;
  std::string solver;
  bool ok = true;
  std::string error;
  bool certified = false;
  SupportMetrics metrics;
  double omegaErrInf = 0.0;
  double rhoErrInf = 0.0;
  double mpjpe = 0.0;
  SolveStats stats;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct CellSummary {
  int supportSize = 0;
  double noisePixels = 0.0;
  std::string solver;
  int trials = 0;
  int failed = 0;
  MeanStd accuracy, specificity, sensitivity, omegaErrInf, rhoErrInf, mpjpe;
};

struct SweepResult {
  std::vector<CellSummary> cells;   // grid order: s-major, then delta, then solver
  std::vector<TrialRecord> trials;  // (cell, trial, solver) order
};

// Poses are cycled per trial; an empty list draws a fresh pose per trial.
SweepResult RunSweep(const Skeleton& skel, const std::vector<Pose>& poses, const CameraModel& cam,
                     const SweepConfig& cfg, Execution exec = Execution::kParallel);

// Noiseless synthetic landmark sequence on the linearized forward model:
// uv_{t+1} = uv_t + f (A rho_t + B omega_t) at the true pose t, which is then
// advanced with ApplyMotion.
struct SyntheticSequence {
  std::vector<Pose> poses;                  // poses[t] matches frames[t]
  std::vector<DifferentialMotion> motions;  // motions[t] takes t -> t+1
  std::vector<Support> supports;
  struct Frame {
    int frameIndex;
    std::vector<Vec2> uv;  // pixels
  };
  std::vector<Frame> frames;
};

struct SequenceOptions {
  int frames = 50;
  int supportSize = 2;
  bool certify = true;
  double magnitudeMinDeg = 0.5;
  double magnitudeMaxDeg = 2.0;
  double rigidScale = 0.002;
  // DoFs eligible for motion; empty means all.
  std::vector<int> candidates;
};

SyntheticSequence GenerateSequence(const Skeleton& skel, const Pose& initPose, const CameraModel& cam,
                                   const SequenceOptions& opts, Rng& rng);

}  // namespace sparsekin
