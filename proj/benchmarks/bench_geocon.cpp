#include <benchmark/benchmark.h>

#include <map>

#include "geocon/camera_geometry.hpp"
#include "geocon/consistency_masks.hpp"
#include "geocon/image_sampling.hpp"
#include "geocon/losses.hpp"
#include "geocon/objective.hpp"
#include "geocon/optimizer.hpp"
#include "geocon/parallel.hpp"
#include "geocon/synthetic_scenes.hpp"

using namespace geocon;

namespace {

const GroundTruth& scene(int size) {
  static std::map<int, GroundTruth> cache;
  auto it = cache.find(size);
  if (it == cache.end()) it = cache.emplace(size, render(textured_plane_fixture(size))).first;
  return it->second;
}

void BM_RigidFlow(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const GroundTruth& gt = scene(size);
  const Intrinsics k = textured_plane_fixture(size).intrinsics;
  for (auto _ : state) benchmark::DoNotOptimize(rigid_flow(gt.depth_t, k, gt.pose));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_RigidFlow)->Arg(64)->Arg(256);

void BM_RigidFlowJacobian(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const GroundTruth& gt = scene(size);
  const Intrinsics k = textured_plane_fixture(size).intrinsics;
  const Vec6 p = params_from_pose(gt.pose);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rigid_flow_with_jacobian(gt.depth_t, k, p, PoseDirection::kForward));
  }
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_RigidFlowJacobian)->Arg(64)->Arg(256);

void BM_InverseWarp(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const GroundTruth& gt = scene(size);
  for (auto _ : state) benchmark::DoNotOptimize(inverse_warp(gt.frame_t1, gt.flow_fwd));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_InverseWarp)->Arg(64)->Arg(256);

void BM_FbCheck(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const GroundTruth& gt = scene(size);
  for (auto _ : state) benchmark::DoNotOptimize(fb_check(gt.flow_fwd, gt.flow_bwd));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_FbCheck)->Arg(64)->Arg(256);

void BM_Photometric(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const GroundTruth& gt = scene(size);
  const ImageBuffer warped = inverse_warp(gt.frame_t1, gt.flow_fwd).values;
  const ValidMask mask(size, size, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(photometric_loss(gt.frame_t, warped, mask, CensusParams{}));
  }
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_Photometric)->Arg(64)->Arg(256);

void BM_ObjectiveGradient(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const GroundTruth& gt = scene(size);
  const Objective objective(gt.frame_t, gt.frame_t1, textured_plane_fixture(size).intrinsics,
                            ObjectiveConfig{});
  const SceneState s = perturb_state(ground_truth_state(gt), 1, 0.2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(objective.evaluate(s, true));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_ObjectiveGradient)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_RefineIteration(benchmark::State& state) {
  const GroundTruth& gt = scene(64);
  OptimizerConfig cfg;
  cfg.iterations = 10;
  const SceneState init = perturb_state(ground_truth_state(gt), 1, 0.2, 0.0);
  const Intrinsics k = textured_plane_fixture(64).intrinsics;
  for (auto _ : state) benchmark::DoNotOptimize(refine(gt.frame_t, gt.frame_t1, k, init, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.iterations);
}
BENCHMARK(BM_RefineIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
