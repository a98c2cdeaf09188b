#include "commands.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.h"
#include "mvdepth/gradcheck.h"
#include "mvdepth/io.h"
#include "mvdepth/parallel.h"
#include "mvdepth/pipeline.h"
#include "mvdepth/scene.h"

namespace mvdepth::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string frame_stem(const char* prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d", prefix, i);
  return buf;
}

// Command failed a configured threshold; exit 1.
struct ThresholdFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SceneParams scene_params(const RunConfig& cfg) {
  if (cfg.has("scene") && !cfg.get_string("scene").empty()) {
    fs::path p = cfg.get_string("scene");
    if (fs::is_directory(p)) p /= "scene.txt";
    return read_scene_description(p);
  }
  SceneParams p;
  p.width = static_cast<int>(cfg.get_int("width"));
  p.height = static_cast<int>(cfg.get_int("height"));
  p.focal = cfg.get_double("focal");
  p.depth_min = cfg.get_double("depth_min");
  p.depth_max = cfg.get_double("depth_max");
  p.fronto_planes = static_cast<int>(cfg.get_int("fronto_planes"));
  p.tilted_planes = static_cast<int>(cfg.get_int("tilted_planes"));
  p.spheres = static_cast<int>(cfg.get_int("spheres"));
  p.background = cfg.get_bool("background");
  p.background_depth = cfg.get_double("background_depth");
  p.shape = parse_trajectory_shape(cfg.get_string("trajectory"));
  p.frames = static_cast<int>(cfg.get_int("frames"));
  p.step = cfg.get_double("step");
  p.arc_step_deg = cfg.get_double("arc_step_deg");
  p.frame_interval = cfg.get_double("frame_interval");
  p.seed = cfg.get_uint("seed");
  return p;
}

struct LoadedScene {
  SyntheticScene scene;
  std::vector<FeatureMap> features;
  std::vector<DepthMap> depths;
};

LoadedScene load_scene(const RunConfig& cfg) {
  LoadedScene s{generate_scene(scene_params(cfg)), {}, {}};
  for (int i = 0; i < s.scene.frame_count(); ++i) {
    RenderedView v = render_view(s.scene, i);
    s.features.push_back(std::move(v.features));
    s.depths.push_back(std::move(v.depth));
  }
  return s;
}

std::unique_ptr<FlowEstimator> make_estimator(const RunConfig& cfg, const SyntheticScene& scene) {
  const std::string name = cfg.get_string("estimator");
  if (name == "oracle") return std::make_unique<OracleFlowEstimator>(scene);
  if (name == "patch") return std::make_unique<PatchFlowEstimator>();
  throw Error(ErrorCode::kInvalidConfig, "estimator must be oracle or patch, got '" + name + "'");
}

PoseMode parse_mode(const std::string& s) {
  if (s == "keyframe") return PoseMode::kKeyframe;
  if (s == "global") return PoseMode::kGlobal;
  throw Error(ErrorCode::kInvalidConfig, "mode must be keyframe or global, got '" + s + "'");
}

DepthMap load_depth(const fs::path& path, double scale) {
  return path.extension() == ".png" ? read_depth16(path, scale) : depth_from_grid(read_grid(path));
}

fs::path output_dir(const RunConfig& cfg) {
  const fs::path dir = cfg.get_string("out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kFileNotFound, "cannot create " + dir.string());
  return dir;
}

Trajectory stamped(const std::vector<Pose>& w2c, const std::vector<double>& timestamps) {
  Trajectory t;
  for (size_t i = 0; i < w2c.size(); ++i) t.push_back({timestamps[i], w2c[i].inverse()});
  return t;
}

void write_depth(const DepthMap& depth, const fs::path& stem, double scale, std::ostream& err) {
  const size_t clamped = write_depth16(depth, stem.string() + ".png", scale);
  if (clamped) err << "warning: " << clamped << " depths clamped in " << stem.string() << ".png\n";
  write_grid(to_grid(depth), stem.string() + ".v2dg");
}

int cmd_gen_scene(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const SceneParams params = scene_params(cfg);
  const SyntheticScene scene = generate_scene(params);
  const fs::path dir = output_dir(cfg);
  const double scale = cfg.get_double("depth_scale");
  write_scene_description(params, dir / "scene.txt");
  write_trajectory(to_records(scene.trajectory()), dir / "groundtruth.txt");
  for (int i = 0; i < scene.frame_count(); ++i) {
    const RenderedView v = render_view(scene, i);
    write_grid(to_grid(v.features), dir / (frame_stem("frame", i) + ".v2dg"));
    write_depth(v.depth, dir / frame_stem("depth", i), scale, err);
  }
  out << "frames\t" << scene.frame_count() << "\n"
      << "width\t" << scene.k.width << "\n"
      << "height\t" << scene.k.height << "\n"
      << "planes\t" << scene.planes.size() << "\n"
      << "spheres\t" << scene.spheres.size() << "\n";
  return kExitOk;
}

int cmd_check_gradients(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  GradientCheckOptions opt;
  std::stringstream families(cfg.has("families") ? cfg.get_string("families") : "");
  for (std::string f; std::getline(families, f, ',');)
    if (!f.empty()) opt.families.push_back(f);
  opt.trials = static_cast<int>(cfg.get_int("trials"));
  opt.seed = cfg.get_uint("seed");
  opt.inject_fault = cfg.has("inject_fault") ? cfg.get_string("inject_fault") : "";
  std::vector<std::string> failed;
  for (const auto& r : run_gradient_checks(opt)) {
    out << r.family << '\t' << fmt(r.max_rel_error) << '\t' << r.trials << '\t'
        << (r.passed() ? "ok" : "FAIL") << '\n';
    if (!r.passed()) failed.push_back(r.family);
  }
  if (!failed.empty()) {
    std::string names;
    for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
    throw ThresholdFailure("gradient check failed: " + names);
  }
  (void)err;
  return kExitOk;
}

// Worst error of every non-reference pose relative to frame 0.
PoseError worst_error(const std::vector<Pose>& est, const std::vector<Pose>& truth) {
  PoseError worst;
  for (size_t j = 1; j < est.size(); ++j) {
    const PoseError e =
        pose_metrics(est[j] * est[0].inverse(), truth[j] * truth[0].inverse());
    worst.rot_deg = std::max(worst.rot_deg, e.rot_deg);
    worst.trans_cm = std::max(worst.trans_cm, e.trans_cm);
  }
  return worst;
}

double loop_closure_residual(const std::vector<Pose>& g) {
  double worst = 0.0;
  const size_t n = g.size();
  auto rel = [&](size_t i, size_t j) { return g[j] * g[i].inverse(); };
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      for (size_t k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        worst = std::max(worst, log_se3(rel(j, k) * rel(i, j) * rel(i, k).inverse()).norm());
      }
  return worst;
}

int cmd_solve_pnp(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const LoadedScene s = load_scene(cfg);
  const auto estimator = make_estimator(cfg, s.scene);
  const int n = s.scene.frame_count();
  if (n < 2) throw Error(ErrorCode::kInsufficientFrames, "solve-pnp needs at least 2 frames");
  const uint64_t seed = cfg.get_uint("seed");

  std::vector<Pose> poses = s.scene.poses;
  for (int j = 1; j < n; ++j) {
    poses[j] = perturb_pose(s.scene.poses[j], cfg.get_double("max_rot_deg"),
                            cfg.get_double("max_trans_m"), seed * 7919u + j);
  }
  MotionConfig motion;
  motion.mode = parse_mode(cfg.get_string("mode"));
  motion.iterations = 1;
  motion.damping = cfg.get_double("damping");
  MotionProblem problem{s.features, s.depths, s.scene.k, {}};

  out << "# iter\trot_deg\ttrans_cm\n";
  auto row = [&](int it) {
    const PoseError e = worst_error(poses, s.scene.poses);
    out << it << '\t' << fmt(e.rot_deg) << '\t' << fmt(e.trans_cm) << '\n';
    return e;
  };
  PoseError last = row(0);
  const int iterations = static_cast<int>(cfg.get_int("iterations"));
  for (int it = 1; it <= iterations; ++it) {
    poses = update_poses(problem, poses, *estimator, motion).poses;
    last = row(it);
  }
  if (motion.mode == PoseMode::kGlobal) {
    out << "loop_closure\t" << fmt(loop_closure_residual(poses)) << '\n';
  }
  write_trajectory(to_records(stamped(poses, s.scene.timestamps)),
                   output_dir(cfg) / "poses.txt");
  const double rot_tol = cfg.get_double("rot_tol_deg");
  const double trans_tol = cfg.get_double("trans_tol_m");
  if (!(last.rot_deg < rot_tol) || !(last.trans_cm / 100.0 < trans_tol)) {
    throw ThresholdFailure("final pose error " + fmt(last.rot_deg) + " deg / " +
                           fmt(last.trans_cm / 100.0) + " m exceeds rot_tol_deg " +
                           fmt(rot_tol) + " / trans_tol_m " + fmt(trans_tol));
  }
  return kExitOk;
}

DepthSpacing parse_spacing(const std::string& s) {
  if (s == "inverse") return DepthSpacing::kInverse;
  if (s == "linear") return DepthSpacing::kLinear;
  throw Error(ErrorCode::kInvalidConfig, "spacing must be linear or inverse, got '" + s + "'");
}

int cmd_run_pipeline(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const LoadedScene s = load_scene(cfg);
  const auto estimator = make_estimator(cfg, s.scene);
  FrameSet frames{s.features, s.scene.timestamps, 0, s.scene.k};
  PipelineConfig pc;
  pc.iterations = static_cast<int>(cfg.get_int("iterations"));
  pc.mode = parse_mode(cfg.get_string("mode"));
  pc.motion_iterations = static_cast<int>(cfg.get_int("motion_iterations"));
  pc.damping = cfg.get_double("damping");
  pc.depth_min = s.scene.params.depth_min;
  pc.depth_max = s.scene.params.depth_max;
  pc.hypotheses = static_cast<int>(cfg.get_int("hypotheses"));
  pc.spacing = parse_spacing(cfg.get_string("spacing"));
  pc.temperature = cfg.get_double("temperature");
  const double scale = cfg.get_double("depth_scale");
  const std::string init = cfg.get_string("init");
  const DepthMap initial =
      init == "constant"
          ? init_depth_constant(s.scene.k.height, s.scene.k.width, pc.depth_min, pc.depth_max)
          : init_depth_external(init, s.scene.k.height, s.scene.k.width, scale);
  const GroundTruth truth{s.scene.poses, s.depths[0]};
  const PipelineResult r = alternate(frames, *estimator, pc, initial, &truth);

  const std::string rows = format_diagnostics(r.diagnostics);
  out << "# iter\trot_deg\ttrans_cm\tsc_inv\n" << rows;
  const fs::path dir = output_dir(cfg);
  write_depth(r.depth, dir / "depth", scale, err);
  write_trajectory(to_records(stamped(r.poses, s.scene.timestamps)), dir / "trajectory.txt");
  std::ofstream diag(dir / "diagnostics.tsv");
  diag << rows;
  if (!diag) throw Error(ErrorCode::kFileNotFound, "cannot write diagnostics.tsv");
  return kExitOk;
}

int cmd_track(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const LoadedScene s = load_scene(cfg);
  const auto estimator = make_estimator(cfg, s.scene);
  FrameSet frames{s.features, s.scene.timestamps, 0, s.scene.k};
  TrackConfig tc;
  const double window = cfg.get_double("window");
  if (window != std::floor(window)) {
    throw Error(ErrorCode::kInvalidConfig, "window must be a whole number of frames");
  }
  tc.window = static_cast<int>(window);
  tc.fixed = static_cast<int>(cfg.get_int("fixed"));
  tc.iterations = static_cast<int>(cfg.get_int("iterations"));
  tc.damping = cfg.get_double("damping");
  const Trajectory t = track(frames, s.depths, *estimator, tc);
  write_trajectory(to_records(t), output_dir(cfg) / "trajectory.txt");
  double rmse = 0.0;
  try {
    rmse = trajectory_rmse(t, s.scene.trajectory());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoAssociations) throw;
    out << "# trajectory shorter than the 1 s evaluation window\n";
    return kExitOk;
  }
  out << "trans_rmse\t" << fmt(rmse) << '\n';
  if (cfg.has("rmse_tol") && !(rmse <= cfg.get_double("rmse_tol"))) {
    throw ThresholdFailure("trans_rmse " + fmt(rmse) + " exceeds rmse_tol " +
                           fmt(cfg.get_double("rmse_tol")));
  }
  return kExitOk;
}

int cmd_eval_depth(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const double scale = cfg.get_double("depth_scale");
  DepthMap pred = load_depth(cfg.get_string("pred"), scale);
  const DepthMap gt = load_depth(cfg.get_string("gt"), scale);
  if (cfg.get_bool("scale_match")) {
    const ScaleMatch sm = scale_match(pred, gt);
    out << "scale\t" << fmt(sm.scale) << '\n';
    pred = sm.scaled;
  }
  out << format_metric_rows(depth_metrics(pred, gt));
  return kExitOk;
}

int cmd_eval_trajectory(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const auto est = read_trajectory(cfg.get_string("est"), &warnings);
  const auto ref = read_trajectory(cfg.get_string("ref"), &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  const double rmse = trajectory_rmse(to_trajectory(est), to_trajectory(ref),
                                      cfg.get_double("window"), cfg.get_double("tolerance"));
  out << "trans_rmse\t" << fmt(rmse) << '\n';
  if (cfg.has("rmse_tol") && !(rmse <= cfg.get_double("rmse_tol"))) {
    throw ThresholdFailure("trans_rmse " + fmt(rmse) + " exceeds rmse_tol " +
                           fmt(cfg.get_double("rmse_tol")));
  }
  return kExitOk;
}

using Command = std::function<int(const RunConfig&, std::ostream&, std::ostream&)>;

const std::vector<std::pair<std::string, std::pair<std::string, Command>>>& commands() {
  static const std::vector<std::pair<std::string, std::pair<std::string, Command>>> table = {
      {"gen-scene", {"write a synthetic scene directory", cmd_gen_scene}},
      {"check-gradients", {"compare analytic Jacobians with finite differences",
                           cmd_check_gradients}},
      {"solve-pnp", {"recover perturbed poses with Gauss-Newton", cmd_solve_pnp}},
      {"run-pipeline", {"alternate depth and motion updates", cmd_run_pipeline}},
      {"track", {"sliding-window tracking over a stream", cmd_track}},
      {"eval-depth", {"depth error metrics", cmd_eval_depth}},
      {"eval-trajectory", {"translational relative pose error", cmd_eval_trajectory}},
  };
  return table;
}

const char* placeholder(KeyType type) {
  switch (type) {
    case KeyType::kInt: return "INT";
    case KeyType::kUInt: return "UINT";
    case KeyType::kDouble: return "FLOAT";
    case KeyType::kBool: return "BOOL";
    case KeyType::kPath: return "PATH";
    case KeyType::kString: break;
  }
  return "TEXT";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound:
    case ErrorCode::kFormatError:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidParams:
    case ErrorCode::kInvalidRange:
    case ErrorCode::kNonUnitQuaternion:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kIndexOutOfRange:
      return kExitUsage;
    default:
      return kExitThreshold;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view depth and motion estimation toolkit", "mvdepth"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expand help for every command");

  struct Parsed {
    CLI::App* sub = nullptr;
    std::string config;
    std::map<std::string, std::string> values;
  };
  std::map<std::string, Parsed> parsed;
  for (const auto& [name, entry] : commands()) {
    Parsed& p = parsed[name];
    p.sub = app.add_subcommand(name, entry.first);
    p.sub->add_option("--config", p.config, "key = value configuration file")->type_name("PATH");
    for (const KeySpec* k : keys_for(name)) {
      auto* opt = p.sub->add_option(flag_name(k->name), p.values[k->name], k->help);
      const std::string d = k->default_for(name);
      if (!d.empty()) opt->default_str(d);
      opt->type_name(placeholder(k->type));
      if (k->hidden) opt->group("");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  for (const auto& [name, entry] : commands()) {
    Parsed& p = parsed[name];
    if (!p.sub->parsed()) continue;
    try {
      RunConfig cfg(name);
      if (!p.config.empty()) cfg.load_file(p.config);
      for (const KeySpec* k : keys_for(name)) {
        if (p.sub->count(flag_name(k->name)) > 0) {
          cfg.set(k->name, p.values[k->name], "command line " + flag_name(k->name));
        }
      }
      const int64_t threads = cfg.get_int("threads");
      if (threads < 0) throw Error(ErrorCode::kInvalidConfig, "threads must be >= 0");
      set_num_threads(static_cast<int>(threads));
      return entry.second(cfg, out, err);
    } catch (const ThresholdFailure& e) {
      err << "FAIL: " << e.what() << '\n';
      return kExitThreshold;
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return exit_code_for(e.code());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  return kExitUsage;
}

}  // namespace mvdepth::cli
