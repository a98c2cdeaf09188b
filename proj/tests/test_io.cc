#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "mvdepth/io.h"
#include "test_util.h"

namespace mvdepth {
namespace {

using testing::code_of;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("mvdepth_io_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_text(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }
  std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
};

TEST_F(IoTest, TrajectoryRoundTrip) {
  std::mt19937_64 rng(3);
  std::vector<TrajectoryRecord> recs;
  for (int i = 0; i < 3; ++i) {
    TrajectoryRecord r;
    r.timestamp = 1305031102.175304 + 0.033 * i;
    r.translation = testing::random_vec3(rng, 2.0);
    r.orientation = Eigen::Quaterniond(testing::random_pose(rng).rotation());
    recs.push_back(r);
  }
  write_trajectory(recs, dir_ / "t.txt");
  const auto back = read_trajectory(dir_ / "t.txt");
  ASSERT_EQ(back.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].timestamp, recs[i].timestamp);
    EXPECT_EQ(back[i].translation, recs[i].translation);
    EXPECT_EQ(back[i].orientation.coeffs(), recs[i].orientation.coeffs());
  }
  write_trajectory(back, dir_ / "t2.txt");
  EXPECT_EQ(read_bytes(dir_ / "t.txt"), read_bytes(dir_ / "t2.txt"));
}

TEST_F(IoTest, IdentityLineAndComments) {
  const fs::path p = write_text("t.txt", "# timestamp tx ty tz qx qy qz qw\n\n0.0 0 0 0 0 0 0 1\n");
  const auto recs = read_trajectory(p);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].timestamp, 0.0);
  const Trajectory t = to_trajectory(recs);
  EXPECT_EQ(t[0].pose.matrix(), Mat4::Identity());
}

TEST_F(IoTest, RecordsSortedOnRead) {
  const fs::path p = write_text("t.txt", "2 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n");
  const auto recs = read_trajectory(p);
  EXPECT_EQ(recs[0].timestamp, 1.0);
  EXPECT_EQ(recs[0].translation.x(), 1.0);
  EXPECT_EQ(recs[1].timestamp, 2.0);
}

TEST_F(IoTest, MalformedLineNamesLine) {
  const fs::path p = write_text("t.txt", "0 0 0 0 0 0 0 1\n# c\n1 0 0 0 0 0 1\n");
  try {
    read_trajectory(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormatError);
    EXPECT_NE(std::string(e.what()).find("t.txt:3"), std::string::npos) << e.what();
  }
  const fs::path q = write_text("q.txt", "0 0 0 zero 0 0 0 1\n");
  EXPECT_EQ(code_of([&] { read_trajectory(q); }), ErrorCode::kFormatError);
  EXPECT_EQ(code_of([&] { read_trajectory(dir_ / "missing.txt"); }), ErrorCode::kFileNotFound);
}

TEST_F(IoTest, QuaternionNormPolicy) {
  std::vector<std::string> warnings;
  const auto near = read_trajectory(write_text("a.txt", "0 0 0 0 0 0 0 1.0005\n"), &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_NEAR(near[0].orientation.norm(), 1.0, 1e-15);
  warnings.clear();
  read_trajectory(write_text("b.txt", "0 0 0 0 0 0 0 1\n"), &warnings);
  EXPECT_TRUE(warnings.empty());
  EXPECT_EQ(code_of([&] { read_trajectory(write_text("c.txt", "0 0 0 0 0 0 0 1.1\n")); }),
            ErrorCode::kNonUnitQuaternion);
}

TEST_F(IoTest, TrajectoryConversionsInvert) {
  std::mt19937_64 rng(4);
  Trajectory t;
  for (int i = 0; i < 4; ++i) t.push_back({0.1 * i, testing::random_pose(rng)});
  const Trajectory back = to_trajectory(to_records(t));
  for (int i = 0; i < 4; ++i) EXPECT_LT(testing::pose_distance(back[i].pose, t[i].pose), 1e-14);
}

TEST_F(IoTest, Depth16RoundTrip) {
  DepthMap d(3, 4);
  d.set(0, 0, 2.0);
  d.set(1, 2, 0.0002);
  d.set(2, 3, 13.107);
  const size_t clamped = write_depth16(d, dir_ / "d.png", 5000);
  EXPECT_EQ(clamped, 0u);
  const DepthMap back = read_depth16(dir_ / "d.png", 5000);
  EXPECT_EQ(back(0, 0), 2.0);
  EXPECT_EQ(back(1, 2), 0.0002);
  EXPECT_EQ(back(2, 3), 13.107);
  EXPECT_FALSE(back.valid(0, 1));
  EXPECT_EQ(back.valid_count(), 3u);
  const DepthMap raw = read_depth16(dir_ / "d.png", 1.0);
  EXPECT_EQ(raw(0, 0), 10000.0);
  EXPECT_EQ(raw(2, 3), 65535.0);
}

TEST_F(IoTest, Depth16ClampsAndCounts) {
  DepthMap d(2, 2);
  d.set(0, 0, 20.0);
  d.set(0, 1, 13.2);
  d.set(1, 1, 1.0);
  EXPECT_EQ(write_depth16(d, dir_ / "d.png", 5000), 2u);
  const DepthMap back = read_depth16(dir_ / "d.png", 5000);
  EXPECT_EQ(back(0, 0), 65535.0 / 5000);
  EXPECT_EQ(back(0, 1), 65535.0 / 5000);
  EXPECT_EQ(back(1, 1), 1.0);
}

TEST_F(IoTest, Depth16Errors) {
  DepthMap d(2, 2);
  EXPECT_EQ(code_of([&] { write_depth16(d, dir_ / "d.png", 0); }), ErrorCode::kInvalidParams);
  EXPECT_EQ(code_of([&] { read_depth16(dir_ / "missing.png", 5000); }), ErrorCode::kFileNotFound);
  const fs::path junk = write_text("junk.png", "not a png at all");
  EXPECT_EQ(code_of([&] { read_depth16(junk, 5000); }), ErrorCode::kFormatError);
}

TEST_F(IoTest, GridLayoutAndRoundTrip) {
  Grid g;
  g.h = 2;
  g.w = 3;
  g.d = 1;
  g.c = 2;
  for (int i = 0; i < 12; ++i) g.data.push_back(0.5f * i);
  write_grid(g, dir_ / "g.v2dg");
  const std::string bytes = read_bytes(dir_ / "g.v2dg");
  ASSERT_EQ(bytes.size(), 4u + 16u + 48u);
  EXPECT_EQ(bytes.substr(0, 4), "V2DG");
  const unsigned char dims[16] = {2, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data() + 4, dims, 16), 0);
  float third;
  std::memcpy(&third, bytes.data() + 20 + 2 * sizeof(float), sizeof(float));
  EXPECT_EQ(third, 1.0f);
  const Grid back = read_grid(dir_ / "g.v2dg");
  EXPECT_EQ(back.h, 2u);
  EXPECT_EQ(back.w, 3u);
  EXPECT_EQ(back.c, 2u);
  EXPECT_EQ(back.data, g.data);
}

TEST_F(IoTest, GridRejectsBadFiles) {
  EXPECT_EQ(code_of([&] { read_grid(write_text("a.v2dg", "XXXX")); }), ErrorCode::kFormatError);
  Grid g;
  g.h = g.w = g.d = g.c = 1;
  g.data = {1.0f};
  write_grid(g, dir_ / "g.v2dg");
  std::string bytes = read_bytes(dir_ / "g.v2dg");
  std::ofstream(dir_ / "short.v2dg", std::ios::binary) << bytes.substr(0, bytes.size() - 1);
  EXPECT_EQ(code_of([&] { read_grid(dir_ / "short.v2dg"); }), ErrorCode::kFormatError);
  std::ofstream(dir_ / "long.v2dg", std::ios::binary) << bytes << "x";
  EXPECT_EQ(code_of([&] { read_grid(dir_ / "long.v2dg"); }), ErrorCode::kFormatError);
  g.data.push_back(2.0f);
  EXPECT_EQ(code_of([&] { write_grid(g, dir_ / "bad.v2dg"); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { read_grid(dir_ / "missing.v2dg"); }), ErrorCode::kFileNotFound);
}

TEST_F(IoTest, DepthAndFeatureGrids) {
  DepthMap d(2, 2);
  d.set(0, 1, 1.5);
  const Grid g = to_grid(d);
  EXPECT_TRUE(std::isnan(g.data[0]));
  EXPECT_EQ(g.data[1], 1.5f);
  EXPECT_EQ(depth_from_grid(g), d);

  FeatureMap f(2, 3, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x)
      for (int c = 0; c < 2; ++c) f(y, x, c) = y * 10 + x + 0.25 * c;
  EXPECT_EQ(features_from_grid(to_grid(f)), f);
  EXPECT_EQ(code_of([&] { depth_from_grid(to_grid(f)); }), ErrorCode::kFormatError);

  ResidualFlowField flow(1, 2);
  flow.set(0, 0, Vec2(0.5, -1), Vec2(0.9, 0.8));
  const Grid fg = to_grid(flow);
  ASSERT_EQ(fg.c, 4u);
  EXPECT_EQ(fg.data[0], 0.5f);
  EXPECT_EQ(fg.data[3], 0.8f);
  EXPECT_TRUE(std::isnan(fg.data[4]));
}

TEST_F(IoTest, KeyValuesKeepLineNumbers) {
  const auto kv = read_key_values(write_text("c.txt", "# header\n\na = 1\n  b=two words \n"));
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].key, "a");
  EXPECT_EQ(kv[0].value, "1");
  EXPECT_EQ(kv[0].line, 3);
  EXPECT_EQ(kv[1].key, "b");
  EXPECT_EQ(kv[1].value, "two words");
  EXPECT_EQ(kv[1].line, 4);
  EXPECT_EQ(code_of([&] { read_key_values(write_text("d.txt", "novalue\n")); }),
            ErrorCode::kFormatError);
}

TEST_F(IoTest, SceneDescriptionRoundTrip) {
  SceneParams p;
  p.width = 80;
  p.height = 48;
  p.focal = 70.5;
  p.shape = TrajectoryShape::kArc;
  p.background = false;
  p.frames = 9;
  p.seed = 123456789012345ull;
  p.arc_step_deg = 0.1;
  write_scene_description(p, dir_ / "scene.txt");
  const SceneParams q = read_scene_description(dir_ / "scene.txt");
  EXPECT_EQ(q.width, 80);
  EXPECT_EQ(q.height, 48);
  EXPECT_EQ(q.focal, 70.5);
  EXPECT_EQ(q.shape, TrajectoryShape::kArc);
  EXPECT_FALSE(q.background);
  EXPECT_EQ(q.frames, 9);
  EXPECT_EQ(q.seed, 123456789012345ull);
  EXPECT_EQ(q.arc_step_deg, 0.1);
  EXPECT_EQ(q.step, p.step);
}

TEST_F(IoTest, SceneDescriptionErrors) {
  EXPECT_EQ(code_of([&] { read_scene_description(write_text("a.txt", "colour = red\n")); }),
            ErrorCode::kFormatError);
  EXPECT_EQ(code_of([&] { read_scene_description(write_text("b.txt", "width = wide\n")); }),
            ErrorCode::kFormatError);
  EXPECT_EQ(code_of([&] { read_scene_description(dir_ / "none.txt"); }), ErrorCode::kFileNotFound);
}

}  // namespace
}  // namespace mvdepth
