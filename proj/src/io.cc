#include "sparsekin/io.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "sparsekin/errors.h"

namespace sparsekin {

using nlohmann::json;

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kCycle: return "cycle";
    case ErrorCode::kNonUnitAxis: return "non-unit-axis";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kInvalidBounds: return "invalid-bounds";
    case ErrorCode::kUnknownJoint: return "unknown-joint";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kDepthTooSmall: return "depth-too-small";
    case ErrorCode::kTooFewVisible: return "too-few-visible";
    case ErrorCode::kCollinearLandmarks: return "collinear-landmarks";
    case ErrorCode::kRankDeficient: return "rank-deficient";
    case ErrorCode::kBudgetExceeded: return "budget-exceeded";
    case ErrorCode::kNoFeasibleSupport: return "no-feasible-support";
    case ErrorCode::kLpFailure: return "lp-failure";
    case ErrorCode::kInvalidCounterexample: return "invalid-counterexample";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kEmptyStream: return "empty-stream";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

json Parse(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

// Wraps field access so type errors surface as parse errors.
template <typename F>
auto Guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

json Vec(const Eigen::VectorXd& v, double scale = 1.0) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i] * scale);
  return a;
}

json Indices(const Support& s) { return json(s.indices); }

std::string Fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

CameraModel ParseCamera(std::string_view text) {
  const json j = Parse(text, "camera");
  CameraModel cam = Guard("camera", [&] {
    CameraModel c;
    c.focal = j.at("focal_px").get<double>();
    if (j.contains("principal_px")) {
      const auto p = j.at("principal_px").get<std::vector<double>>();
      if (p.size() != 2) throw Error(ErrorCode::kParse, "camera: principal_px needs 2 values");
      c.principal = Vec2(p[0], p[1]);
    }
    c.minDepth = j.value("min_depth", 1e-3);
    return c;
  });
  cam.validate();
  return cam;
}

CameraModel LoadCameraFile(const std::string& path) { return ParseCamera(ReadTextFile(path)); }

Pose ParsePose(std::string_view text, const Skeleton& skel) {
  const json j = Parse(text, "pose");
  return Guard("pose", [&] {
    Pose pose;
    const json& T = j.at("cameraToRoot");
    const auto r = T.at("rotation").get<std::vector<double>>();
    const auto t = T.at("translation").get<std::vector<double>>();
    if (r.size() != 9 || t.size() != 3) {
      throw Error(ErrorCode::kParse, "pose: rotation needs 9 values and translation 3");
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) pose.cameraToRoot.rotation(a, b) = r[3 * a + b];
    pose.cameraToRoot.translation = Vec3(t[0], t[1], t[2]);
    if (pose.cameraToRoot.orthonormalityError() > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument, "pose: rotation is not orthonormal");
    }
    const auto th = j.at("theta_deg").get<std::vector<double>>();
    if (static_cast<int>(th.size()) != skel.dof()) {
      throw Error(ErrorCode::kDimensionMismatch, "pose: theta_deg has " + std::to_string(th.size()) +
                                                     " entries, skeleton has " + std::to_string(skel.dof()));
    }
    pose.theta.resize(skel.dof());
    for (int i = 0; i < skel.dof(); ++i) pose.theta[i] = th[i] * kDeg;
    return pose;
  });
}

Pose LoadPoseFile(const std::string& path, const Skeleton& skel) { return ParsePose(ReadTextFile(path), skel); }

std::string PoseToJson(const Pose& pose) {
  json r = json::array();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r.push_back(pose.cameraToRoot.rotation(a, b));
  const Vec3& t = pose.cameraToRoot.translation;
  json j;
  j["cameraToRoot"] = {{"rotation", r}, {"translation", {t.x(), t.y(), t.z()}}};
  j["theta_deg"] = Vec(pose.theta, 1.0 / kDeg);
  return j.dump();
}

std::uint64_t PoseHash(const Pose& pose) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : PoseToJson(pose)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Observation ParseObservation(std::string_view text, int numLandmarks, const CameraModel& cam) {
  const json j = Parse(text, "observation");
  return Guard("observation", [&] {
    Observation obs = Observation::Zero(numLandmarks);
    obs.frameIndex = j.value("frame", 0);
    const std::string units = j.value("units", std::string("normalized"));
    if (units != "normalized" && units != "pixels") {
      throw Error(ErrorCode::kParse, "observation: units must be 'normalized' or 'pixels'");
    }
    const auto y = j.at("y").get<std::vector<double>>();
    if (static_cast<int>(y.size()) != 2 * numLandmarks) {
      throw Error(ErrorCode::kDimensionMismatch, "observation: y must have 2N entries");
    }
    const double scale = units == "pixels" ? 1.0 / cam.focal : 1.0;
    for (int i = 0; i < 2 * numLandmarks; ++i) obs.y[i] = y[i] * scale;
    if (j.contains("visible")) {
      const auto v = j.at("visible").get<std::vector<bool>>();
      if (static_cast<int>(v.size()) != numLandmarks) {
        throw Error(ErrorCode::kDimensionMismatch, "observation: visible must have N entries");
      }
      obs.visible = v;
    }
    return obs;
  });
}

Observation LoadObservationFile(const std::string& path, int numLandmarks, const CameraModel& cam) {
  return ParseObservation(ReadTextFile(path), numLandmarks, cam);
}

std::string ObservationToJson(const Observation& obs) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["frame"] = obs.frameIndex;
  j["units"] = "normalized";
  j["y"] = Vec(obs.y);
  j["visible"] = obs.visible;
  return j.dump();
}

SweepConfig ParseSweepConfig(std::string_view text) {
  const json j = Parse(text, "sweep config");
  SweepConfig cfg = Guard("sweep config", [&] {
    SweepConfig c;
    if (j.contains("support_sizes")) c.supportSizes = j.at("support_sizes").get<std::vector<int>>();
    if (j.contains("noise_px")) c.noisePixels = j.at("noise_px").get<std::vector<double>>();
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    if (j.contains("magnitude_deg")) {
      const auto m = j.at("magnitude_deg").get<std::vector<double>>();
      if (m.size() != 2) throw Error(ErrorCode::kInvalidConfig, "magnitude_deg needs [min, max]");
      c.magnitudeMinDeg = m[0];
      c.magnitudeMaxDeg = m[1];
    }
    c.rigidScale = j.value("rigid_scale", c.rigidScale);
    c.runL2 = j.value("run_l2", c.runL2);
    c.certifiedSupportsOnly = j.value("certified_supports_only", c.certifiedSupportsOnly);
    c.certifyAttempts = j.value("certify_attempts", c.certifyAttempts);
    if (j.contains("occlude_landmark") && !j.at("occlude_landmark").is_null()) {
      c.occludeLandmark = j.at("occlude_landmark").get<int>();
    }
    c.supportEpsilon = j.value("support_epsilon", c.supportEpsilon);
    if (j.contains("rf")) {
      const json& r = j.at("rf");
      c.rf.admmRho = r.value("admm_rho", c.rf.admmRho);
      c.rf.maxIter = r.value("max_iter", c.rf.maxIter);
      c.rf.primalTol = r.value("primal_tol", c.rf.primalTol);
      c.rf.dualTol = r.value("dual_tol", c.rf.dualTol);
      c.rf.boxEnabled = r.value("box", c.rf.boxEnabled);
    }
    if (j.contains("sampler")) {
      const json& s = j.at("sampler");
      c.sampler.depth = s.value("depth", c.sampler.depth);
      c.sampler.depthJitter = s.value("depth_jitter", c.sampler.depthJitter);
      c.sampler.lateralJitter = s.value("lateral_jitter", c.sampler.lateralJitter);
      c.sampler.minLandmarkDepth = s.value("min_landmark_depth", c.sampler.minLandmarkDepth);
    }
    return c;
  });
  if (cfg.trials < 1) throw Error(ErrorCode::kInvalidConfig, "trials must be >= 1");
  if (cfg.supportSizes.empty() || cfg.noisePixels.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "support_sizes and noise_px must be non-empty");
  }
  return cfg;
}

SweepConfig LoadSweepConfigFile(const std::string& path) { return ParseSweepConfig(ReadTextFile(path)); }

std::vector<LandmarkFrame> ParseLandmarkCsv(std::string_view text, int numLandmarks) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineNo = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kParse, "landmark csv line " + std::to_string(lineNo) + ": " + why);
  };
  auto trim = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    size_t b = s.find_first_not_of(' ');
    return b == std::string::npos ? std::string() : s.substr(b);
  };
  if (!std::getline(in, line)) throw Error(ErrorCode::kEmptyStream, "landmark csv is empty");
  ++lineNo;
  if (trim(line) != "frame,landmark_id,u,v,visible") fail("expected header frame,landmark_id,u,v,visible");

  std::vector<LandmarkFrame> frames;
  std::vector<bool> seen;
  while (std::getline(in, line)) {
    ++lineNo;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 5) fail("expected 5 fields");
    int frame = 0, id = 0, vis = 0;
    double u = 0.0, v = 0.0;
    try {
      size_t pos = 0;
      frame = std::stoi(cells[0], &pos);
      if (pos != cells[0].size()) fail("bad frame");
      id = std::stoi(cells[1], &pos);
      if (pos != cells[1].size()) fail("bad landmark_id");
      u = std::stod(cells[2], &pos);
      if (pos != cells[2].size()) fail("bad u");
      v = std::stod(cells[3], &pos);
      if (pos != cells[3].size()) fail("bad v");
      vis = std::stoi(cells[4], &pos);
      if (pos != cells[4].size() || (vis != 0 && vis != 1)) fail("visible must be 0 or 1");
    } catch (const std::logic_error&) {
      fail("non-numeric field");
    }
    if (id < 0 || id >= numLandmarks) fail("landmark_id out of range");
    if (!std::isfinite(u) || !std::isfinite(v)) fail("non-finite coordinate");
    if (frames.empty() || frame > frames.back().frameIndex) {
      LandmarkFrame f;
      f.frameIndex = frame;
      f.uv.assign(numLandmarks, Vec2::Zero());
      f.visible.assign(numLandmarks, false);
      frames.push_back(std::move(f));
      seen.assign(numLandmarks, false);
    } else if (frame < frames.back().frameIndex) {
      fail("frame indices out of order");
    }
    if (seen[id]) fail("duplicate landmark row");
    seen[id] = true;
    frames.back().uv[id] = Vec2(u, v);
    frames.back().visible[id] = vis == 1;
  }
  if (frames.empty()) throw Error(ErrorCode::kEmptyStream, "landmark csv has no rows");
  return frames;
}

std::vector<LandmarkFrame> LoadLandmarkCsvFile(const std::string& path, int numLandmarks) {
  return ParseLandmarkCsv(ReadTextFile(path), numLandmarks);
}

std::string LandmarkCsv(const std::vector<LandmarkFrame>& frames) {
  std::ostringstream out;
  out << "frame,landmark_id,u,v,visible\n";
  char buf[128];
  for (const LandmarkFrame& f : frames) {
    for (int i = 0; i < f.numLandmarks(); ++i) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%d\n", f.frameIndex, i, f.uv[i].x(), f.uv[i].y(),
                    f.visible[i] ? 1 : 0);
      out << buf;
    }
  }
  return out.str();
}

std::string FrameRecordJson(const FrameResult& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["frame"] = r.frameIndex;
  j["rho"] = Vec(r.motion.rho);
  j["omega"] = Vec(r.motion.omega, 1.0 / kDeg);
  j["theta_deg"] = Vec(r.theta, 1.0 / kDeg);
  j["support"] = Indices(r.support);
  j["reproj_err_px"] = r.reprojErrPixels;
  j["reinit"] = r.reinitFlag;
  j["skipped"] = r.skipped;
  if (!r.error.empty()) j["error"] = r.error;
  j["solver"] = {{"iterations", r.solverStats.iterations},
                 {"status", SolveStatusName(r.solverStats.status)}};
  return j.dump();
}

std::string SolveResultJson(const DifferentialMotion& m, const Support& support, const SolveStats* stats,
                            const std::string& solver) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["solver"] = solver;
  j["rho"] = Vec(m.rho);
  j["omega_deg"] = Vec(m.omega, 1.0 / kDeg);
  j["support"] = Indices(support);
  if (stats) {
    j["stats"] = {{"iterations", stats->iterations},
                  {"primal_residual", stats->primalResidual},
                  {"dual_residual", stats->dualResidual},
                  {"objective", stats->objective},
                  {"converged", stats->converged},
                  {"polished", stats->polished},
                  {"status", SolveStatusName(stats->status)}};
  } else {
    j["stats"] = nullptr;
  }
  return j.dump();
}

std::string CertificateJson(const PkspVerdict& v, const AmbiguityBasis& basis, const Pose& pose,
                            const Support* support, int order, const Support* worst) {
  json j;
  j["schema_version"] = kSchemaVersion;
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(PoseHash(pose)));
  j["pose_hash"] = hash;
  if (support) j["support"] = Indices(*support);
  else j["order"] = order;
  if (worst) j["worst_support"] = Indices(*worst);
  j["mode"] = PkspModeName(v.mode);
  j["holds"] = v.holds;
  j["margin"] = v.margin;
  j["linear_programs"] = v.linearPrograms;
  j["ambiguity_dim"] = basis.dim();
  j["near_rank_threshold"] = basis.nearRankThreshold;
  j["counterexample"] = v.counterexample ? Vec(*v.counterexample) : json(nullptr);
  return j.dump();
}

std::string SweepCsv(const SweepResult& r) {
  std::ostringstream out;
  out << "s,delta_px,solver,trials,failed";
  for (const char* m : {"accuracy", "specificity", "sensitivity", "omega_err_inf", "rho_err_inf", "mpjpe"}) {
    out << ',' << m << "_mean," << m << "_std";
  }
  out << '\n';
  for (const CellSummary& c : r.cells) {
    out << c.supportSize << ',' << Fmt(c.noisePixels) << ',' << c.solver << ',' << c.trials << ',' << c.failed;
    for (const MeanStd* m : {&c.accuracy, &c.specificity, &c.sensitivity, &c.omegaErrInf, &c.rhoErrInf, &c.mpjpe}) {
      out << ',' << Fmt(m->mean) << ',' << Fmt(m->std);
    }
    out << '\n';
  }
  return out.str();
}

std::string SweepJsonl(const SweepResult& r) {
  std::ostringstream out;
  for (const TrialRecord& t : r.trials) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["cell"] = t.cell;
    j["trial"] = t.trial;
    j["s"] = t.supportSize;
    j["delta_px"] = t.noisePixels;
    j["solver"] = t.solver;
    j["ok"] = t.ok;
    if (!t.ok) j["error"] = t.error;
    j["certified"] = t.certified;
    j["accuracy"] = t.metrics.accuracy;
    j["specificity"] = t.metrics.specificity;
    j["sensitivity"] = t.metrics.sensitivity;
    j["omega_err_inf"] = t.omegaErrInf;
    j["rho_err_inf"] = t.rhoErrInf;
    j["mpjpe"] = t.mpjpe;
    if (t.solver == "rf") {
      j["iterations"] = t.stats.iterations;
      j["status"] = SolveStatusName(t.stats.status);
    }
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace sparsekin
