// Parallel kernels against their serial references, plus the per-frame solve.
#include <benchmark/benchmark.h>

#include "sparsekin/camera.h"
#include "sparsekin/experiments.h"
#include "sparsekin/kinematics.h"
#include "sparsekin/pksp.h"
#include "sparsekin/solvers.h"

namespace sk = sparsekin;

namespace {

const sk::Skeleton& Skel() {
  static const sk::Skeleton s = sk::LoadSkeletonFile(SPARSEKIN_DATA_DIR "/skeleton40.json");
  return s;
}

sk::Pose BenchPose() {
  sk::Rng rng(7);
  return sk::SamplePose(Skel(), rng);
}

sk::SweepConfig SmallSweep() {
  sk::SweepConfig cfg;
  cfg.supportSizes = {3};
  cfg.noisePixels = {0.0, 2.0};
  cfg.trials = 8;
  cfg.seed = 11;
  return cfg;
}

void BM_Sweep(benchmark::State& state) {
  const auto exec = state.range(0) ? sk::Execution::kParallel : sk::Execution::kSerial;
  const sk::CameraModel cam;
  const sk::SweepConfig cfg = SmallSweep();
  for (auto _ : state) benchmark::DoNotOptimize(sk::RunSweep(Skel(), {}, cam, cfg, exec));
}
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_PkspOrder(benchmark::State& state) {
  const auto exec = state.range(0) ? sk::Execution::kParallel : sk::Execution::kSerial;
  const sk::CameraModel cam;
  const sk::SystemMatrices sys = sk::AssembleSystem(Skel(), BenchPose(), cam);
  const sk::AmbiguityBasis basis = sk::AmbiguityNullspace(sys.A, sys.B);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sk::CheckPKSPOrder(basis, 2, sk::PkspMode::kExact, 1000000, 0, exec));
  }
}
BENCHMARK(BM_PkspOrder)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_FrameSolve(benchmark::State& state) {
  const sk::CameraModel cam;
  const sk::Pose pose = BenchPose();
  sk::Rng rng(3);
  sk::TrialConfig tc;
  const sk::DifferentialMotion m = sk::GenSparseMotion(Skel(), pose, 3, rng, tc);
  const sk::Observation obs = sk::SynthesizeObservation(Skel(), pose, m, cam, 0.0, rng);
  for (auto _ : state) {
    const sk::SystemMatrices sys = sk::AssembleSystem(Skel(), pose, cam);
    benchmark::DoNotOptimize(sk::SolveRF(sys, obs, sk::SolveOptions::Tracking()));
  }
}
BENCHMARK(BM_FrameSolve)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
