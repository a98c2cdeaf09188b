#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "mvdepth/io.h"
#include "mvdepth/pipeline.h"
#include "mvdepth/scene.h"
#include "test_util.h"

namespace mvdepth {
namespace {

using testing::code_of;

struct Rendered {
  SyntheticScene scene;
  FrameSet frames;
  std::vector<DepthMap> depths;
};

Rendered render(const SceneParams& p) {
  Rendered r{generate_scene(p), {}, {}};
  r.frames.k = r.scene.k;
  r.frames.timestamps = r.scene.timestamps;
  for (int i = 0; i < r.scene.frame_count(); ++i) {
    RenderedView v = render_view(r.scene, i);
    r.frames.features.push_back(std::move(v.features));
    r.depths.push_back(std::move(v.depth));
  }
  return r;
}

SceneParams small_scene(int frames, uint64_t seed = 1) {
  SceneParams p;
  p.width = p.height = 48;
  p.frames = frames;
  p.seed = seed;
  return p;
}

TEST(InitDepth, ConstantIsGeometricMean) {
  const DepthMap d = init_depth_constant(4, 5, 0.2, 10.0);
  EXPECT_EQ(d.valid_count(), 20u);
  for (size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d.at(i), 1.4142135623730951, 1e-15);
  EXPECT_EQ(code_of([] { init_depth_constant(0, 5, 1, 2); }), ErrorCode::kInvalidParams);
  EXPECT_EQ(code_of([] { init_depth_constant(4, 5, 2, 1); }), ErrorCode::kInvalidRange);
}

TEST(InitDepth, ExternalPassesThrough) {
  const fs::path dir = fs::temp_directory_path() / "mvdepth_pipeline_init";
  fs::create_directories(dir);
  DepthMap gt(3, 4);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      if (x != 2) gt.set(y, x, 1.0 + 0.25 * x + 0.5 * y);
  write_grid(to_grid(gt), dir / "gt.v2dg");
  write_depth16(gt, dir / "gt.png", 4000);
  EXPECT_EQ(init_depth_external(dir / "gt.v2dg", 3, 4), gt);
  EXPECT_EQ(init_depth_external(dir / "gt.png", 3, 4, 4000), gt);
  EXPECT_EQ(code_of([&] { init_depth_external(dir / "gt.v2dg", 4, 4); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { init_depth_external(dir / "none.v2dg", 3, 4); }),
            ErrorCode::kFileNotFound);
  fs::remove_all(dir);
}

TEST(FrameSet, Validation) {
  Rendered r = render(small_scene(3));
  EXPECT_NO_THROW(r.frames.validate());
  EXPECT_EQ(code_of([&] { r.frames.validate(4); }), ErrorCode::kInsufficientFrames);
  FrameSet bad = r.frames;
  bad.timestamps[2] = bad.timestamps[1];
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kInvalidParams);
  bad = r.frames;
  bad.keyframe = 3;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kIndexOutOfRange);
  bad = r.frames;
  bad.features[1] = FeatureMap(48, 48, 1);
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kDimensionMismatch);
}

PipelineConfig quick_config(int iterations) {
  PipelineConfig c;
  c.iterations = iterations;
  c.depth_min = 1.0;
  c.depth_max = 5.0;
  c.hypotheses = 16;
  return c;
}

TEST(Alternate, ZeroIterationsReturnsInitialization) {
  const Rendered r = render(small_scene(3));
  const OracleFlowEstimator est(r.scene);
  const DepthMap init = init_depth_constant(48, 48, 1, 5);
  const GroundTruth truth{r.scene.poses, r.depths[0]};
  const PipelineResult out = alternate(r.frames, est, quick_config(0), init, &truth);
  EXPECT_EQ(out.depth, init);
  for (const Pose& g : out.poses) EXPECT_EQ(g.matrix(), Mat4::Identity());
  ASSERT_EQ(out.diagnostics.size(), 1u);
  EXPECT_EQ(out.diagnostics[0].iter, 0);
}

TEST(Alternate, KeyframeStaysIdentityAndRunsAreDeterministic) {
  Rendered r = render(small_scene(3, 2));
  r.frames.keyframe = 1;
  const OracleFlowEstimator est(r.scene);
  const DepthMap init = init_depth_constant(48, 48, 1, 5);
  const GroundTruth truth{r.scene.poses, r.depths[1]};
  const PipelineResult a = alternate(r.frames, est, quick_config(3), init, &truth);
  const PipelineResult b = alternate(r.frames, est, quick_config(3), init, &truth);
  EXPECT_EQ(a.poses[1].matrix(), Mat4::Identity());
  EXPECT_EQ(a.depth, b.depth);
  for (size_t i = 0; i < a.poses.size(); ++i) EXPECT_EQ(a.poses[i].matrix(), b.poses[i].matrix());
  EXPECT_EQ(format_diagnostics(a.diagnostics), format_diagnostics(b.diagnostics));
  EXPECT_EQ(a.diagnostics.size(), 4u);
}

TEST(Alternate, GlobalModeKeepsPerFrameDepths) {
  const Rendered r = render(small_scene(3, 3));
  const OracleFlowEstimator est(r.scene);
  PipelineConfig c = quick_config(1);
  c.mode = PoseMode::kGlobal;
  const PipelineResult out = alternate(r.frames, est, c, init_depth_constant(48, 48, 1, 5));
  ASSERT_EQ(out.depths.size(), 3u);
  EXPECT_EQ(out.depths[0], out.depth);
  EXPECT_EQ(out.poses[0].matrix(), Mat4::Identity());
  EXPECT_TRUE(out.diagnostics.empty());
}

TEST(Alternate, ReducesPoseErrorFromInitialization) {
  const Rendered r = render(small_scene(4, 4));
  const OracleFlowEstimator est(r.scene);
  const GroundTruth truth{r.scene.poses, r.depths[0]};
  const PipelineResult out =
      alternate(r.frames, est, quick_config(4), init_depth_constant(48, 48, 1, 5), &truth);
  ASSERT_EQ(out.diagnostics.size(), 5u);
  EXPECT_LT(out.diagnostics.back().rot_deg, out.diagnostics[1].rot_deg);
  EXPECT_LT(out.diagnostics.back().sc_inv, out.diagnostics[0].sc_inv);
}

TEST(Alternate, Errors) {
  const Rendered r = render(small_scene(3));
  const OracleFlowEstimator est(r.scene);
  FrameSet one = r.frames;
  one.features.resize(1);
  one.timestamps.resize(1);
  const DepthMap init = init_depth_constant(48, 48, 1, 5);
  EXPECT_EQ(code_of([&] { alternate(one, est, quick_config(1), init); }),
            ErrorCode::kInsufficientFrames);
  EXPECT_EQ(code_of([&] { alternate(r.frames, est, quick_config(1), DepthMap(4, 4)); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { alternate(r.frames, est, quick_config(-1), init); }),
            ErrorCode::kInvalidParams);
}

TEST(Diagnostics, RowFormat) {
  const std::vector<DiagnosticRow> rows = {{0, 1.5, 2.0, 0.25}, {1, 0.125, 0.0, 1e-7}};
  EXPECT_EQ(format_diagnostics(rows), "0\t1.5\t2\t0.25\n1\t0.125\t0\t1e-07\n");
}

TEST(Diagnostics, TruthGivesZeroRow) {
  const Rendered r = render(small_scene(3, 6));
  const GroundTruth truth{r.scene.poses, r.depths[0]};
  const DiagnosticRow row = pipeline_diagnostic(2, r.depths[0], r.scene.poses, 0, truth);
  EXPECT_EQ(row.iter, 2);
  EXPECT_EQ(row.rot_deg, 0.0);
  EXPECT_EQ(row.trans_cm, 0.0);
  EXPECT_EQ(row.sc_inv, 0.0);
}

TEST(Track, SevenFramesAreInsufficient) {
  const Rendered r = render(small_scene(7));
  const OracleFlowEstimator est(r.scene);
  EXPECT_EQ(code_of([&] { track(r.frames, r.depths, est, TrackConfig()); }),
            ErrorCode::kInsufficientFrames);
}

TEST(Track, InvalidSettings) {
  const Rendered r = render(small_scene(8));
  const OracleFlowEstimator est(r.scene);
  TrackConfig c;
  c.fixed = 8;
  EXPECT_EQ(code_of([&] { track(r.frames, r.depths, est, c); }), ErrorCode::kInvalidParams);
  std::vector<DepthMap> short_depths(r.depths.begin(), r.depths.end() - 1);
  EXPECT_EQ(code_of([&] { track(r.frames, short_depths, est, TrackConfig()); }),
            ErrorCode::kDimensionMismatch);
}

TEST(Track, StaticStreamIsIdentity) {
  SceneParams p = small_scene(12);
  p.shape = TrajectoryShape::kStatic;
  const Rendered r = render(p);
  const OracleFlowEstimator est(r.scene);
  const Trajectory t = track(r.frames, r.depths, est, TrackConfig());
  ASSERT_EQ(t.size(), 12u);
  for (size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t[i].timestamp, r.scene.timestamps[i]);
    EXPECT_EQ(t[i].pose.matrix(), Mat4::Identity());
  }
  EXPECT_EQ(trajectory_rmse(t, r.scene.trajectory()), 0.0);
}

TEST(Track, ConstantVelocityIsRecovered) {
  SceneParams p = small_scene(14, 8);
  p.step = 0.1;
  const Rendered r = render(p);
  const OracleFlowEstimator est(r.scene);
  const Trajectory t = track(r.frames, r.depths, est, TrackConfig());
  EXPECT_LT(trajectory_rmse(t, r.scene.trajectory()), 1e-4);
}

}  // namespace
}  // namespace mvdepth
