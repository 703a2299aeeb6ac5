// Batch entry point. Exit codes: 0 ok, 1 bad input, 2 budget or
// non-convergence, 3 property fails.
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsekin/camera.h"
#include "sparsekin/errors.h"
#include "sparsekin/experiments.h"
#include "sparsekin/io.h"
#include "sparsekin/kinematics.h"
#include "sparsekin/pksp.h"
#include "sparsekin/solvers.h"
#include "sparsekin/tracker.h"

namespace sk = sparsekin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitResource = 2;
constexpr int kExitFails = 3;

struct Common {
  std::string skeleton;
  std::string camera;
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--skeleton", c.skeleton, "skeleton JSON")->required();
  cmd->add_option("--camera", c.camera, "camera JSON")->required();
}

sk::Support ParseSupport(const std::string& text, int dof) {
  sk::Support s;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t pos = 0;
    int i = 0;
    try {
      i = std::stoi(item, &pos);
    } catch (const std::logic_error&) {
      throw sk::Error(sk::ErrorCode::kParse, "bad support entry '" + item + "'");
    }
    if (pos != item.size() || i < 0 || i >= dof) {
      throw sk::Error(sk::ErrorCode::kInvalidArgument, "support entry '" + item + "' out of range");
    }
    s.indices.push_back(i);
  }
  std::sort(s.indices.begin(), s.indices.end());
  if (std::adjacent_find(s.indices.begin(), s.indices.end()) != s.indices.end()) {
    throw sk::Error(sk::ErrorCode::kInvalidArgument, "support has repeated entries");
  }
  return s;
}

int SolveFrame(const Common& c, const std::string& posePath, const std::string& obsPath,
               const std::string& solver, const std::string& box, int l0Max) {
  const sk::Skeleton skel = sk::LoadSkeletonFile(c.skeleton);
  const sk::CameraModel cam = sk::LoadCameraFile(c.camera);
  const sk::Pose pose = sk::LoadPoseFile(posePath, skel);
  const sk::Observation obs = sk::LoadObservationFile(obsPath, skel.numLandmarks(), cam);
  const sk::SystemMatrices sys = sk::AssembleSystem(skel, pose, cam, obs.visible);
  const sk::ReducedSystem rs(sys, sys.reduce(obs.y));
  if (solver == "rf") {
    sk::SolveOptions opts = sk::SolveOptions::Exact();
    opts.boxEnabled = box == "on";
    auto [m, stats] = sk::SolveRF(rs, opts);
    std::cout << sk::SolveResultJson(m, sk::ExtractSupport(m.omega), &stats, solver) << '\n';
    return stats.converged ? kExitOk : kExitResource;
  }
  if (solver == "l2") {
    const sk::DifferentialMotion m = sk::SolveL2(rs);
    std::cout << sk::SolveResultJson(m, sk::ExtractSupport(m.omega), nullptr, solver) << '\n';
    return kExitOk;
  }
  auto [m, support] = sk::SolveL0Oracle(rs, l0Max);
  std::cout << sk::SolveResultJson(m, support, nullptr, solver) << '\n';
  return kExitOk;
}

int PkspCheck(const Common& c, const std::string& posePath, const std::string& supportText, int order,
              const std::string& mode, long long budget, std::uint64_t seed) {
  const sk::Skeleton skel = sk::LoadSkeletonFile(c.skeleton);
  const sk::CameraModel cam = sk::LoadCameraFile(c.camera);
  const sk::Pose pose = sk::LoadPoseFile(posePath, skel);
  const sk::SystemMatrices sys = sk::AssembleSystem(skel, pose, cam);
  const sk::AmbiguityBasis basis = sk::AmbiguityNullspace(sys.A, sys.B);
  const sk::PkspMode m = mode == "exact" ? sk::PkspMode::kExact : sk::PkspMode::kRandomized;
  sk::PkspVerdict verdict;
  if (!supportText.empty()) {
    const sk::Support s = ParseSupport(supportText, skel.dof());
    verdict = sk::CheckPKSP(basis, s, m, budget, seed);
    std::cout << sk::CertificateJson(verdict, basis, pose, &s, 0, nullptr) << '\n';
  } else {
    if (order < 0 || order > skel.dof()) {
      throw sk::Error(sk::ErrorCode::kInvalidArgument, "--order must lie in [0, d]");
    }
    auto [v, worst] = sk::CheckPKSPOrder(basis, order, m, budget, seed, sk::Execution::kSerial);
    verdict = v;
    std::cout << sk::CertificateJson(verdict, basis, pose, nullptr, order, &worst) << '\n';
  }
  return verdict.holds ? kExitOk : kExitFails;
}

int SynthBench(const Common& c, const std::string& configPath, const std::string& outDir, bool serial) {
  const sk::Skeleton skel = sk::LoadSkeletonFile(c.skeleton);
  const sk::CameraModel cam = sk::LoadCameraFile(c.camera);
  const sk::SweepConfig cfg = sk::LoadSweepConfigFile(configPath);
  std::error_code ec;
  std::filesystem::create_directories(outDir, ec);
  if (ec) throw sk::Error(sk::ErrorCode::kIo, "cannot create '" + outDir + "': " + ec.message());
  // Fail on an unwritable directory before spending time on the sweep.
  const std::string csvPath = (std::filesystem::path(outDir) / "summary.csv").string();
  const std::string jsonlPath = (std::filesystem::path(outDir) / "trials.jsonl").string();
  sk::WriteTextFile(csvPath, "");
  const sk::SweepResult r =
      sk::RunSweep(skel, {}, cam, cfg, serial ? sk::Execution::kSerial : sk::Execution::kParallel);
  sk::WriteTextFile(csvPath, sk::SweepCsv(r));
  sk::WriteTextFile(jsonlPath, sk::SweepJsonl(r));
  std::cerr << "wrote " << r.cells.size() << " rows to " << csvPath << '\n';
  return kExitOk;
}

int Track(const Common& c, const std::string& initPath, const std::string& csvPath, double threshold,
          const std::string& reinitPath, const std::string& outPath) {
  const sk::Skeleton skel = sk::LoadSkeletonFile(c.skeleton);
  const sk::CameraModel cam = sk::LoadCameraFile(c.camera);
  const sk::Pose init = sk::LoadPoseFile(initPath, skel);
  const std::vector<sk::LandmarkFrame> frames = sk::LoadLandmarkCsvFile(csvPath, skel.numLandmarks());
  if (!(threshold > 0.0)) throw sk::Error(sk::ErrorCode::kInvalidArgument, "--reinit-threshold must be > 0");

  // Reinit poses: {"<frame>": pose, ...}
  std::map<int, sk::Pose> reinit;
  if (!reinitPath.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(sk::ReadTextFile(reinitPath));
    } catch (const nlohmann::json::exception& e) {
      throw sk::Error(sk::ErrorCode::kParse, std::string("reinit poses: ") + e.what());
    }
    if (!j.is_object()) throw sk::Error(sk::ErrorCode::kParse, "reinit poses must be an object keyed by frame");
    for (auto& [key, value] : j.items()) reinit[std::stoi(key)] = sk::ParsePose(value.dump(), skel);
  }
  sk::ReinitProvider provider;
  if (!reinit.empty()) {
    provider = [&](int frame) -> std::optional<sk::Pose> {
      auto it = reinit.find(frame);
      if (it == reinit.end()) return std::nullopt;
      return it->second;
    };
  }
  sk::TrackerOptions opts;
  opts.reinitThresholdPixels = threshold;
  const std::vector<sk::FrameResult> results = sk::TrackSequence(init, frames, skel, cam, opts, provider);

  std::ostringstream out;
  int reinits = 0;
  double errSum = 0.0;
  for (const sk::FrameResult& r : results) {
    out << sk::FrameRecordJson(r) << '\n';
    reinits += r.reinitFlag;
    errSum += r.reprojErrPixels;
  }
  nlohmann::json summary;
  summary["schema_version"] = sk::kSchemaVersion;
  summary["summary"] = true;
  summary["frames"] = results.size();
  summary["reinit_count"] = reinits;
  summary["mean_reproj_err_px"] = errSum / results.size();
  out << summary.dump() << '\n';
  if (outPath.empty()) std::cout << out.str();
  else sk::WriteTextFile(outPath, out.str());
  return kExitOk;
}

int ValidateSkeleton(const std::string& path) {
  const sk::Skeleton skel = sk::LoadSkeletonFile(path);
  nlohmann::json j;
  j["schema_version"] = sk::kSchemaVersion;
  j["name"] = skel.name();
  j["dof"] = skel.dof();
  j["landmarks"] = skel.numLandmarks();
  j["joints"] = skel.groups().size();
  j["valid"] = true;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse articulated motion recovery from 2D landmark motion"};
  app.require_subcommand(1);

  Common common;
  std::string pose, obs, solver = "rf", box = "off";
  int l0Max = 4;
  auto* solve = app.add_subcommand("solve-frame", "recover (rho, omega) for one differential observation");
  AddCommon(solve, common);
  solve->add_option("--pose", pose)->required();
  solve->add_option("--observation", obs)->required();
  solve->add_option("--solver", solver)->check(CLI::IsMember({"rf", "l2", "l0"}));
  solve->add_option("--box", box)->check(CLI::IsMember({"on", "off"}));
  solve->add_option("--l0-max", l0Max, "largest support tried by the l0 oracle");

  std::string support, mode = "exact";
  int order = -1;
  long long budget = -1;
  std::uint64_t seed = 0x5eed;
  auto* pksp = app.add_subcommand("pksp-check", "certify exact recovery on a support or for every support of a size");
  AddCommon(pksp, common);
  pksp->add_option("--pose", pose)->required();
  auto* supOpt = pksp->add_option("--support", support, "comma separated DoF indices");
  auto* ordOpt = pksp->add_option("--order", order, "check every support of this size");
  supOpt->excludes(ordOpt);
  pksp->add_option("--mode", mode)->check(CLI::IsMember({"exact", "randomized"}));
  pksp->add_option("--budget", budget);
  pksp->add_option("--seed", seed);

  std::string config, outDir;
  bool serial = false;
  auto* bench = app.add_subcommand("synth-bench", "synthetic accuracy and specificity sweep");
  AddCommon(bench, common);
  bench->add_option("--config", config)->required();
  bench->add_option("--out", outDir)->required();
  bench->add_flag("--serial", serial, "run trials on one thread");

  std::string initPose, landmarks, reinitPoses, outPath;
  double threshold = 50.0;
  auto* track = app.add_subcommand("track", "track a landmark sequence");
  AddCommon(track, common);
  track->add_option("--init-pose", initPose)->required();
  track->add_option("--landmarks", landmarks)->required();
  track->add_option("--reinit-threshold", threshold, "pixels");
  track->add_option("--reinit-poses", reinitPoses, "JSON object of poses keyed by frame index");
  track->add_option("--out", outPath, "JSON-lines output file (default stdout)");

  std::string skelPath;
  auto* validate = app.add_subcommand("validate-skeleton", "parse and check a skeleton config");
  validate->add_option("--skeleton", skelPath)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*solve) return SolveFrame(common, pose, obs, solver, box, l0Max);
    if (*pksp) {
      if (support.empty() && order < 0) {
        std::cerr << "pksp-check: one of --support or --order is required\n";
        return kExitInput;
      }
      const long long b = budget > 0 ? budget : (support.empty() ? 1000000 : 4096);
      return PkspCheck(common, pose, support, order, mode, b, seed);
    }
    if (*bench) return SynthBench(common, config, outDir, serial);
    if (*track) return Track(common, initPose, landmarks, threshold, reinitPoses, outPath);
    if (*validate) return ValidateSkeleton(skelPath);
  } catch (const sk::Error& e) {
    std::cerr << "error [" << sk::ErrorCodeName(e.code()) << "]: " << e.what() << '\n';
    return e.code() == sk::ErrorCode::kBudgetExceeded ? kExitResource : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
