#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sparsekin/camera.h"
#include "sparsekin/experiments.h"
#include "sparsekin/kinematics.h"
#include "sparsekin/pksp.h"
#include "sparsekin/solvers.h"
#include "sparsekin/tracker.h"

namespace sparsekin {

inline constexpr int kSchemaVersion = 1;

std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& text);

// {focal_px, principal_px: [u, v], min_depth}
CameraModel ParseCamera(std::string_view text);
CameraModel LoadCameraFile(const std::string& path);

// {cameraToRoot: {rotation: 9 row-major, translation: 3}, theta_deg: d}
Pose ParsePose(std::string_view text, const Skeleton& skel);
Pose LoadPoseFile(const std::string& path, const Skeleton& skel);
std::string PoseToJson(const Pose& pose);
// FNV-1a over the serialized pose.
std::uint64_t PoseHash(const Pose& pose);

// {schema_version, frame, units: normalized|pixels, y: 2N, visible: N}
Observation ParseObservation(std::string_view text, int numLandmarks, const CameraModel& cam);
Observation LoadObservationFile(const std::string& path, int numLandmarks, const CameraModel& cam);
std::string ObservationToJson(const Observation& obs);

SweepConfig ParseSweepConfig(std::string_view text);
SweepConfig LoadSweepConfigFile(const std::string& path);

// Header `frame,landmark_id,u,v,visible`; missing rows mean invisible.
std::vector<LandmarkFrame> ParseLandmarkCsv(std::string_view text, int numLandmarks);
std::vector<LandmarkFrame> LoadLandmarkCsvFile(const std::string& path, int numLandmarks);
std::string LandmarkCsv(const std::vector<LandmarkFrame>& frames);

std::string FrameRecordJson(const FrameResult& r);
std::string SolveResultJson(const DifferentialMotion& m, const Support& support, const SolveStats* stats,
                            const std::string& solver);
std::string CertificateJson(const PkspVerdict& v, const AmbiguityBasis& basis, const Pose& pose,
                            const Support* support, int order, const Support* worst);

std::string SweepCsv(const SweepResult& r);
std::string SweepJsonl(const SweepResult& r);

}  // namespace sparsekin
