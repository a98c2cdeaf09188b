#include <vector>

#include <benchmark/benchmark.h>

#include "mvdepth/costvol.h"
#include "mvdepth/motion.h"
#include "mvdepth/sampler.h"
#include "mvdepth/scene.h"

namespace mvdepth {
namespace {

struct Fixture {
  SyntheticScene scene;
  std::vector<FeatureMap> features;
  std::vector<DepthMap> depths;

  Fixture(int size, int frames) {
    SceneParams p;
    p.width = p.height = size;
    p.frames = frames;
    scene = generate_scene(p);
    for (int i = 0; i < frames; ++i) {
      RenderedView v = render_view(scene, i);
      features.push_back(std::move(v.features));
      depths.push_back(std::move(v.depth));
    }
  }
};

void BM_RenderView(benchmark::State& state) {
  SceneParams p;
  p.width = p.height = static_cast<int>(state.range(0));
  const SyntheticScene scene = generate_scene(p);
  for (auto _ : state) benchmark::DoNotOptimize(render_view(scene, 1));
  state.SetItemsProcessed(state.iterations() * p.width * p.height);
}
BENCHMARK(BM_RenderView)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_WarpFeatureMap(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)), 2);
  const Pose g01 = f.scene.poses[1] * f.scene.poses[0].inverse();
  for (auto _ : state)
    benchmark::DoNotOptimize(warp_feature_map(f.features[1], f.scene.k, g01, f.depths[0]));
  state.SetItemsProcessed(state.iterations() * f.scene.k.width * f.scene.k.height);
}
BENCHMARK(BM_WarpFeatureMap)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_BuildCostVolume(benchmark::State& state) {
  const Fixture f(64, 2);
  const DepthHypotheses hyp =
      depth_hypotheses(1.0, 5.0, static_cast<int>(state.range(0)), DepthSpacing::kInverse);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        build_cost_volume(f.features[0], f.features[1], f.scene.k, f.scene.poses[1], hyp));
}
BENCHMARK(BM_BuildCostVolume)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EstimateDepth(benchmark::State& state) {
  const Fixture f(64, static_cast<int>(state.range(0)));
  const DepthHypotheses hyp = depth_hypotheses(1.0, 5.0, 32, DepthSpacing::kInverse);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_depth(f.features, f.scene.poses, 0, f.scene.k, hyp));
}
BENCHMARK(BM_EstimateDepth)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_GaussNewtonIteration(benchmark::State& state) {
  const Fixture f(64, 4);
  const OracleFlowEstimator oracle(f.scene);
  std::vector<Pose> start = f.scene.poses;
  for (size_t j = 1; j < start.size(); ++j) start[j] = perturb_pose(start[j], 3.0, 0.05, j);
  MotionConfig cfg;
  cfg.mode = state.range(0) ? PoseMode::kGlobal : PoseMode::kKeyframe;
  const MotionProblem problem{f.features, f.depths, f.scene.k, {}};
  for (auto _ : state) benchmark::DoNotOptimize(update_poses(problem, start, oracle, cfg));
  state.SetLabel(state.range(0) ? "global" : "keyframe");
}
BENCHMARK(BM_GaussNewtonIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SolveNormalEquations(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(6 * n + 6, 6 * n);
  NormalSystem sys;
  sys.h = a.transpose() * a + Eigen::MatrixXd::Identity(6 * n, 6 * n);
  sys.b = Eigen::VectorXd::Random(6 * n);
  for (auto _ : state) benchmark::DoNotOptimize(gauss_newton_step(sys));
}
BENCHMARK(BM_SolveNormalEquations)->Arg(1)->Arg(3)->Arg(7);

}  // namespace
}  // namespace mvdepth

BENCHMARK_MAIN();
