#include "sparsekin/tracker.h"

#include <cmath>

#include "sparsekin/errors.h"

namespace sparsekin {

LandmarkFrame ProjectFrame(const Skeleton& skel, const Pose& pose, const CameraModel& cam, int frameIndex) {
  LandmarkFrame f;
  f.frameIndex = frameIndex;
  for (const Vec3& p : LandmarkPositions(skel, pose)) {
    const bool ok = p.z() >= cam.minDepth;
    f.visible.push_back(ok);
    f.uv.push_back(ok ? ProjectPixels(p, cam) : Vec2::Zero());
  }
  return f;
}

Observation DifferentialObservation(const LandmarkFrame& prev, const LandmarkFrame& curr,
                                    const CameraModel& cam) {
  if (prev.numLandmarks() != curr.numLandmarks()) {
    throw Error(ErrorCode::kDimensionMismatch, "frames carry different landmark counts");
  }
  const int n = curr.numLandmarks();
  Observation obs = Observation::Zero(n);
  obs.frameIndex = curr.frameIndex;
  int count = 0;
  for (int i = 0; i < n; ++i) {
    obs.visible[i] = prev.visible[i] && curr.visible[i];
    if (!obs.visible[i]) continue;
    ++count;
    obs.y.segment<2>(2 * i) = cam.normalize(curr.uv[i]) - cam.normalize(prev.uv[i]);
  }
  if (count < 3) {
    throw Error(ErrorCode::kTooFewVisible,
                "frame " + std::to_string(curr.frameIndex) + " has fewer than 3 jointly visible landmarks");
  }
  return obs;
}

double ReprojectionError(const Skeleton& skel, const Pose& pose, const LandmarkFrame& frame,
                         const CameraModel& cam) {
  if (frame.numLandmarks() != skel.numLandmarks()) {
    throw Error(ErrorCode::kDimensionMismatch, "frame landmark count does not match the skeleton");
  }
  const std::vector<Vec3> pts = LandmarkPositions(skel, pose);
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < frame.numLandmarks(); ++i) {
    if (!frame.visible[i]) continue;
    // A landmark behind the camera cannot be compared; count it as invisible.
    if (pts[i].z() < cam.minDepth) continue;
    sum += (ProjectPixels(pts[i], cam) - frame.uv[i]).norm();
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kTooFewVisible, "no visible landmarks to compare");
  return sum / count;
}

TrackerState InitTracker(const Skeleton& skel, const Pose& initPose, const CameraModel& cam, int frameIndex) {
  TrackerState state;
  state.pose = initPose;
  state.pose.theta = ClampAngles(initPose.theta, skel);
  state.lastFrame = ProjectFrame(skel, state.pose, cam, frameIndex);
  return state;
}

std::pair<TrackerState, FrameResult> StepFrame(const TrackerState& state, const LandmarkFrame& frame,
                                               const Skeleton& skel, const CameraModel& cam,
                                               const TrackerOptions& opts) {
  TrackerState next = state;
  FrameResult res;
  res.frameIndex = frame.frameIndex;
  res.motion = DifferentialMotion::Zero(skel.dof());
  res.theta = state.pose.theta;

  auto skip = [&](const std::string& why, bool reinit) {
    res.skipped = true;
    res.error = why;
    res.reinitFlag = reinit;
    try {
      res.reprojErrPixels = ReprojectionError(skel, state.pose, frame, cam);
    } catch (const Error&) {
      res.reprojErrPixels = 0.0;
    }
    next.needsReinit = reinit;
    return std::make_pair(next, res);
  };

  Observation obs;
  try {
    obs = DifferentialObservation(state.lastFrame, frame, cam);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTooFewVisible) return skip(e.what(), false);
    throw;
  }
  const std::vector<Vec3> pts = LandmarkPositions(skel, state.pose);
  int usable = 0;
  for (int i = 0; i < skel.numLandmarks(); ++i) {
    obs.visible[i] = obs.visible[i] && pts[i].z() >= cam.minDepth;
    usable += obs.visible[i];
  }
  if (usable < 3) return skip("fewer than 3 landmarks in front of the camera", false);

  std::pair<DifferentialMotion, SolveStats> solved;
  try {
    const SystemMatrices sys = AssembleSystem(skel, state.pose, cam, obs.visible);
    solved = SolveRF(sys, obs, opts.solve);
  } catch (const Error& e) {
    return skip(e.what(), true);
  }
  res.solverStats = solved.second;
  if (solved.second.status == SolveStatus::kInfeasibleBox) {
    return skip("observation not explainable within the per-frame joint limit", true);
  }

  res.motion = solved.first;
  res.support = ExtractSupport(res.motion.omega, opts.supportEpsilon);
  next.pose.theta = ClampAngles(state.pose.theta + res.motion.omega, skel);
  next.pose.cameraToRoot = ExpTwist(res.motion.rigidTwist(), 1.0) * state.pose.cameraToRoot;
  if (opts.renormalizeEvery > 0 && ++next.steps >= opts.renormalizeEvery) {
    next.pose.cameraToRoot = Renormalize(next.pose.cameraToRoot);
    next.steps = 0;
  }
  next.lastFrame = frame;
  res.theta = next.pose.theta;
  res.reprojErrPixels = ReprojectionError(skel, next.pose, frame, cam);
  next.cumulativeReprojErr += res.reprojErrPixels;
  res.reinitFlag = next.needsReinit = res.reprojErrPixels > opts.reinitThresholdPixels;
  return {next, res};
}

std::vector<FrameResult> TrackSequence(const Pose& initPose, const std::vector<LandmarkFrame>& frames,
                                       const Skeleton& skel, const CameraModel& cam,
                                       const TrackerOptions& opts, const ReinitProvider& reinitProvider) {
  if (frames.empty()) throw Error(ErrorCode::kEmptyStream, "landmark stream is empty");
  for (size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].numLandmarks() != skel.numLandmarks() ||
        static_cast<int>(frames[t].visible.size()) != skel.numLandmarks()) {
      throw Error(ErrorCode::kDimensionMismatch, "frame landmark count does not match the skeleton");
    }
    if (t > 0 && frames[t].frameIndex <= frames[t - 1].frameIndex) {
      throw Error(ErrorCode::kInvalidArgument, "frame indices must be strictly increasing");
    }
  }
  TrackerState state = InitTracker(skel, initPose, cam, frames.front().frameIndex - 1);
  std::vector<FrameResult> out;
  out.reserve(frames.size());
  for (const LandmarkFrame& f : frames) {
    auto [next, res] = StepFrame(state, f, skel, cam, opts);
    state = std::move(next);
    if (state.needsReinit && reinitProvider) {
      if (std::optional<Pose> p = reinitProvider(f.frameIndex)) {
        state = InitTracker(skel, *p, cam, f.frameIndex);
        res.theta = state.pose.theta;
      }
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace sparsekin
