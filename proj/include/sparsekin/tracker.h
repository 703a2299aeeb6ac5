#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparsekin/camera.h"
#include "sparsekin/kinematics.h"
#include "sparsekin/solvers.h"

namespace sparsekin {

struct LandmarkFrame {
  int frameIndex = 0;
  std::vector<Vec2> uv;        // pixels
  std::vector<bool> visible;
  std::optional<double> timestamp;

  int numLandmarks() const { return static_cast<int>(uv.size()); }
};

struct TrackerOptions {
  SolveOptions solve = SolveOptions::Tracking();
  double reinitThresholdPixels = 50.0;
  int renormalizeEvery = 100;
  double supportEpsilon = kDefaultSupportEpsilon;
};

struct TrackerState {
  Pose pose;
  LandmarkFrame lastFrame;
  double cumulativeReprojErr = 0.0;
  bool needsReinit = false;
  long long steps = 0;  // rigid compositions since the last renormalization
};

struct FrameResult {
  int frameIndex = 0;
  DifferentialMotion motion;
  Support support;
  double reprojErrPixels = 0.0;
  SolveStats solverStats;
  bool reinitFlag = false;
  // Frame not integrated; the next differential is taken against lastFrame.
  bool skipped = false;
  std::string error;
  Eigen::VectorXd theta;  // pose after the step
};

// Model landmarks of `pose` projected to pixels; landmarks nearer than
// minDepth are marked invisible.
LandmarkFrame ProjectFrame(const Skeleton& skel, const Pose& pose, const CameraModel& cam, int frameIndex);

// Normalized displacement curr - prev on the jointly visible landmarks.
Observation DifferentialObservation(const LandmarkFrame& prev, const LandmarkFrame& curr,
                                    const CameraModel& cam);

// Mean pixel distance between projected model landmarks and observed ones.
double ReprojectionError(const Skeleton& skel, const Pose& pose, const LandmarkFrame& frame,
                         const CameraModel& cam);

// lastFrame starts as the projection of the initial pose.
TrackerState InitTracker(const Skeleton& skel, const Pose& initPose, const CameraModel& cam,
                         int frameIndex = -1);

std::pair<TrackerState, FrameResult> StepFrame(const TrackerState& state, const LandmarkFrame& frame,
                                               const Skeleton& skel, const CameraModel& cam,
                                               const TrackerOptions& opts = {});

// Returns a pose for the given frame index, or nothing to continue as is.
using ReinitProvider = std::function<std::optional<Pose>(int frameIndex)>;

std::vector<FrameResult> TrackSequence(const Pose& initPose, const std::vector<LandmarkFrame>& frames,
                                       const Skeleton& skel, const CameraModel& cam,
                                       const TrackerOptions& opts = {},
                                       const ReinitProvider& reinitProvider = {});

}  // namespace sparsekin
