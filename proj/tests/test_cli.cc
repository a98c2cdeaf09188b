#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "commands.h"

namespace mvdepth::cli {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "mvdepth");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("mvdepth_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return path(name);
  }
  // Small scene so the inference commands stay fast.
  std::string small_scene(int frames = 4) const {
    CliRun r = run({"gen-scene", "--width", "40", "--height", "40", "--frames",
                 std::to_string(frames), "--out", path("scene")});
    EXPECT_EQ(r.code, 0) << r.err;
    return path("scene");
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"teleport"}).code, kExitUsage);
  const CliRun r = run({"check-gradients", "--colour", "red"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run({"check-gradients", "--trials", "many"}).code, kExitUsage);
  EXPECT_EQ(run({"check-gradients", "--threads", "-2"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, CheckGradientsDefault) {
  const CliRun r = run({"check-gradients"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(count_lines(r.out), 8);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, CheckGradientsFaultInjection) {
  const CliRun r = run({"check-gradients", "--inject-fault", "lie.action_jacobian"});
  EXPECT_EQ(r.code, kExitThreshold);
  EXPECT_NE(r.err.find("lie.action_jacobian"), std::string::npos) << r.err;
}

TEST_F(CliTest, CheckGradientsFilter) {
  const CliRun r = run({"check-gradients", "--families", "camera"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(count_lines(r.out), 1);
  EXPECT_EQ(r.out.rfind("camera.", 0), 0u);
  EXPECT_EQ(run({"check-gradients", "--families", "optics"}).code, kExitUsage);
}

TEST_F(CliTest, ConfigLayering) {
  const std::string cfg = write("c.txt", "# trials for every family\ntrials = 3\n");
  CliRun r = run({"check-gradients", "--config", cfg, "--families", "lie"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("\t3\tok"), std::string::npos) << r.out;
  r = run({"check-gradients", "--config", cfg, "--families", "lie", "--trials", "4"});
  EXPECT_NE(r.out.find("\t4\tok"), std::string::npos) << r.out;
}

TEST_F(CliTest, ConfigRejectsUnknownAndMisplacedKeys) {
  CliRun r = run({"check-gradients", "--config", write("a.txt", "trials = 3\nspeed = 9\n")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("a.txt:2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("speed"), std::string::npos) << r.err;
  r = run({"check-gradients", "--config", write("b.txt", "iterations = 3\n")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("iterations"), std::string::npos) << r.err;
  r = run({"check-gradients", "--config", write("c.txt", "trials = lots\n")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(run({"check-gradients", "--config", path("none.txt")}).code, kExitUsage);
}

TEST_F(CliTest, GenSceneIsDeterministic) {
  const std::string dir = small_scene();
  for (const char* f : {"scene.txt", "groundtruth.txt", "frame_000.v2dg", "depth_003.png",
                        "depth_003.v2dg"}) {
    EXPECT_TRUE(fs::exists(fs::path(dir) / f)) << f;
  }
  const std::string first = read_file(fs::path(dir) / "frame_002.v2dg");
  fs::remove_all(dir);
  small_scene();
  EXPECT_EQ(read_file(fs::path(dir) / "frame_002.v2dg"), first);
}

TEST_F(CliTest, EvalDepthIdentity) {
  const std::string dir = small_scene();
  const std::string gt = dir + "/depth_000.png";
  const CliRun r = run({"eval-depth", "--pred", gt, "--gt", gt});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  for (const char* zero : {"abs_rel\t0\n", "sq_rel\t0\n", "rmse\t0\n", "rmse_log\t0\n",
                           "log10\t0\n", "sc_inv\t0\n"}) {
    EXPECT_NE(r.out.find(zero), std::string::npos) << zero << r.out;
  }
  for (const char* one : {"delta1\t1\n", "delta2\t1\n", "delta3\t1\n"}) {
    EXPECT_NE(r.out.find(one), std::string::npos) << one;
  }
  const CliRun grid = run({"eval-depth", "--pred", dir + "/depth_000.v2dg", "--gt", gt});
  EXPECT_EQ(grid.code, kExitOk) << grid.err;
}

TEST_F(CliTest, EvalDepthMissingFile) {
  const CliRun r = run({"eval-depth", "--pred", path("nope.png"), "--gt", path("nope.png")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("nope.png"), std::string::npos);
  EXPECT_EQ(run({"eval-depth", "--gt", path("nope.png")}).code, kExitUsage);
}

TEST_F(CliTest, EvalTrajectoryIdentityAndThreshold) {
  const std::string traj = write("t.txt",
                                 "0 0 0 0 0 0 0 1\n0.5 0.5 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n"
                                 "1.5 1.5 0 0 0 0 0 1\n");
  const std::string still = write("s.txt",
                                  "0 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1\n"
                                  "1.5 0 0 0 0 0 0 1\n");
  CliRun r = run({"eval-trajectory", "--est", traj, "--ref", traj});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "trans_rmse\t0\n");
  r = run({"eval-trajectory", "--est", still, "--ref", traj, "--rmse-tol", "0.5"});
  EXPECT_EQ(r.code, kExitThreshold);
  EXPECT_NE(r.out.find("trans_rmse\t1\n"), std::string::npos) << r.out;
  const std::string bad = write("bad.txt", "0 0 0 0 0 0 1\n");
  r = run({"eval-trajectory", "--est", bad, "--ref", traj});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("bad.txt:1"), std::string::npos) << r.err;
}

TEST_F(CliTest, SolvePnpConverges) {
  const std::string dir = small_scene();
  const CliRun r = run({"solve-pnp", "--scene", dir, "--out", path("pnp")});
  EXPECT_EQ(r.code, kExitOk) << r.err << r.out;
  EXPECT_TRUE(fs::exists(path("pnp") + "/poses.txt"));
}

TEST_F(CliTest, SolvePnpZeroPerturbation) {
  const std::string dir = small_scene();
  const CliRun r = run({"solve-pnp", "--scene", dir, "--max-rot-deg", "0", "--max-trans-m", "0",
                     "--iterations", "2", "--out", path("pnp")});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("0\t0\t0\n1\t0\t0\n2\t0\t0\n"), std::string::npos) << r.out;
}

TEST_F(CliTest, SolvePnpGlobalReportsLoopClosure) {
  const std::string dir = small_scene();
  const CliRun r = run({"solve-pnp", "--scene", dir, "--mode", "global", "--frames", "4",
                     "--out", path("pnp")});
  EXPECT_EQ(r.code, kExitOk) << r.err << r.out;
  EXPECT_NE(r.out.find("loop_closure\t"), std::string::npos) << r.out;
}

TEST_F(CliTest, RunPipelineWritesArtifacts) {
  const std::string dir = small_scene(3);
  const CliRun r = run({"run-pipeline", "--scene", dir, "--iterations", "2", "--hypotheses", "8",
                     "--out", path("run")});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(count_lines(r.out), 4);
  for (const char* f : {"depth.png", "depth.v2dg", "trajectory.txt", "diagnostics.tsv"}) {
    EXPECT_TRUE(fs::exists(path("run") + "/" + f)) << f;
  }
  EXPECT_EQ(run({"run-pipeline", "--scene", dir, "--mode", "sideways"}).code, kExitUsage);
}

TEST_F(CliTest, RunPipelinePoseErrorFallsOverFirstIterations) {
  ASSERT_EQ(run({"gen-scene", "--out", path("scene")}).code, 0);
  const CliRun r = run({"run-pipeline", "--scene", path("scene"), "--iterations", "8",
                        "--out", path("run")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream rows(r.out);
  std::string line;
  std::vector<double> rot, trans;
  while (std::getline(rows, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream f(line);
    int iter;
    double a, b, sc;
    f >> iter >> a >> b >> sc;
    rot.push_back(a);
    trans.push_back(b);
  }
  ASSERT_EQ(rot.size(), 9u);
  // Row 0 is the identity initialization; iterations 1-4 follow.
  for (int it = 2; it <= 4; ++it) {
    EXPECT_LE(rot[it], rot[it - 1]) << it;
    EXPECT_LE(trans[it], trans[it - 1]) << it;
  }
}

}  // namespace
}  // namespace mvdepth::cli
