#include "config.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "mvdepth/error.h"
#include "mvdepth/io.h"

namespace mvdepth::cli {
namespace {

using T = KeyType;

const std::vector<std::string> kSceneCommands = {"gen-scene", "solve-pnp", "run-pipeline",
                                                 "track"};

std::vector<KeySpec> build_schema() {
  const auto scene = kSceneCommands;
  std::vector<KeySpec> s = {
      {"seed", T::kUInt, "0", "random seed for scene generation and perturbations", {}},
      {"threads", T::kInt, "0", "worker thread cap (0 = hardware concurrency)", {}},
      {"out", T::kPath, "out", "output directory", {}},

      {"scene", T::kPath, "", "scene directory or scene.txt (overrides scene keys)",
       {"solve-pnp", "run-pipeline", "track"}},
      {"width", T::kInt, "64", "image width in pixels", scene},
      {"height", T::kInt, "64", "image height in pixels", scene},
      {"focal", T::kDouble, "0", "focal length in pixels (0 = width)", scene},
      {"depth_min", T::kDouble, "1", "near end of the scene depth range (m)", scene},
      {"depth_max", T::kDouble, "5", "far end of the scene depth range (m)", scene},
      {"fronto_planes", T::kInt, "2", "fronto-parallel textured rectangles", scene},
      {"tilted_planes", T::kInt, "2", "tilted textured rectangles", scene},
      {"spheres", T::kInt, "2", "textured spheres", scene},
      {"background", T::kBool, "true", "add a textured background plane", scene},
      {"background_depth", T::kDouble, "0", "background plane depth (0 = automatic)", scene},
      {"trajectory", T::kString, "line", "camera path: static, line or arc", scene},
      {"frames", T::kInt, "4", "number of frames", scene, {{"track", "16"}}},
      {"step", T::kDouble, "0.05", "translation per frame along a line (m)", scene,
       {{"track", "0.1"}}},
      {"arc_step_deg", T::kDouble, "1.5", "yaw per frame along an arc (deg)", scene},
      {"frame_interval", T::kDouble, "0.1", "seconds between frames", scene},
      {"depth_scale", T::kDouble, "5000", "16-bit depth units per meter",
       {"gen-scene", "run-pipeline", "eval-depth"}},

      {"families", T::kString, "", "comma-separated gradient families or module prefixes",
       {"check-gradients"}},
      {"trials", T::kInt, "50", "random configurations per gradient family",
       {"check-gradients"}},
      {"inject_fault", T::kString, "", "negate one analytic Jacobian (self-test)",
       {"check-gradients"}, {}, true},

      {"mode", T::kString, "keyframe", "pose optimization: keyframe or global",
       {"solve-pnp", "run-pipeline"}},
      {"iterations", T::kInt, "10", "Gauss-Newton iterations / alternation iterations",
       {"solve-pnp", "run-pipeline", "track"}, {{"run-pipeline", "8"}, {"track", "5"}}},
      {"damping", T::kDouble, "0", "Levenberg damping added to the normal equations",
       {"solve-pnp", "run-pipeline", "track"}},
      {"estimator", T::kString, "oracle", "residual flow estimator: oracle or patch",
       {"solve-pnp", "run-pipeline", "track"}},
      {"max_rot_deg", T::kDouble, "5", "rotation perturbation bound (deg)", {"solve-pnp"}},
      {"max_trans_m", T::kDouble, "0.1", "translation perturbation bound (m)", {"solve-pnp"}},
      {"rot_tol_deg", T::kDouble, "0.01", "final rotation error threshold (deg)", {"solve-pnp"}},
      {"trans_tol_m", T::kDouble, "0.0001", "final translation error threshold (m)",
       {"solve-pnp"}},

      {"motion_iterations", T::kInt, "1", "Gauss-Newton steps per motion update",
       {"run-pipeline"}},
      {"hypotheses", T::kInt, "32", "depth hypotheses", {"run-pipeline"}},
      {"spacing", T::kString, "inverse", "hypothesis spacing: linear or inverse",
       {"run-pipeline"}},
      {"temperature", T::kDouble, "1", "soft-argmax temperature", {"run-pipeline"}},
      {"init", T::kString, "constant", "initial depth: constant or a depth file path",
       {"run-pipeline"}},

      {"window", T::kDouble, "8", "tracking window (frames) / RPE window (s)",
       {"track", "eval-trajectory"}, {{"eval-trajectory", "1"}}},
      {"fixed", T::kInt, "3", "leading window poses held fixed", {"track"}},
      {"rmse_tol", T::kDouble, "", "fail when translational RMSE (m/s) exceeds this",
       {"track", "eval-trajectory"}},

      {"pred", T::kPath, "", "predicted depth file (.png or .v2dg)", {"eval-depth"}},
      {"gt", T::kPath, "", "ground-truth depth file (.png or .v2dg)", {"eval-depth"}},
      {"scale_match", T::kBool, "false", "median-scale the prediction before scoring",
       {"eval-depth"}},
      {"est", T::kPath, "", "estimated TUM trajectory", {"eval-trajectory"}},
      {"ref", T::kPath, "", "reference TUM trajectory", {"eval-trajectory"}},
      {"tolerance", T::kDouble, "0.02", "timestamp association tolerance (s)",
       {"eval-trajectory"}},
  };
  return s;
}

bool parse_bool(const std::string& v, bool* out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    *out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    *out = false;
    return true;
  }
  return false;
}

template <typename Num>
bool parse_number(const std::string& v, Num* out) {
  const char* b = v.data();
  if (!v.empty() && v.front() == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, v.data() + v.size(), *out);
  return ec == std::errc() && ptr == v.data() + v.size();
}

bool type_ok(KeyType type, const std::string& v) {
  switch (type) {
    case T::kInt: {
      int64_t x;
      return parse_number(v, &x);
    }
    case T::kUInt: {
      uint64_t x;
      return parse_number(v, &x);
    }
    case T::kDouble: {
      double x;
      return parse_number(v, &x) && std::isfinite(x);
    }
    case T::kBool: {
      bool x;
      return parse_bool(v, &x);
    }
    case T::kString:
    case T::kPath:
      return true;
  }
  return false;
}

const char* type_name(KeyType type) {
  switch (type) {
    case T::kInt: return "an integer";
    case T::kUInt: return "a nonnegative integer";
    case T::kDouble: return "a number";
    case T::kBool: return "true or false";
    case T::kString: return "a string";
    case T::kPath: return "a path";
  }
  return "a value";
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

}  // namespace

bool KeySpec::applies_to(const std::string& command) const {
  return commands.empty() || std::find(commands.begin(), commands.end(), command) != commands.end();
}

std::string KeySpec::default_for(const std::string& command) const {
  const auto it = command_defaults.find(command);
  return it == command_defaults.end() ? default_value : it->second;
}

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = build_schema();
  return schema;
}

std::vector<const KeySpec*> keys_for(const std::string& command) {
  std::vector<const KeySpec*> out;
  for (const auto& k : config_schema())
    if (k.applies_to(command)) out.push_back(&k);
  return out;
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

RunConfig::RunConfig(std::string command) : command_(std::move(command)) {
  for (const KeySpec* k : keys_for(command_)) {
    const std::string d = k->default_for(command_);
    if (!d.empty()) values_[k->name] = d;
  }
}

const KeySpec& RunConfig::spec(const std::string& key, const std::string& origin) const {
  for (const auto& k : config_schema()) {
    if (k.name == key) {
      if (!k.applies_to(command_)) {
        throw Error(ErrorCode::kInvalidConfig,
                    origin + ": key '" + key + "' does not apply to " + command_);
      }
      return k;
    }
  }
  throw Error(ErrorCode::kInvalidConfig, origin + ": unknown key '" + key + "'");
}

void RunConfig::set(const std::string& key_in, const std::string& value,
                    const std::string& origin) {
  const std::string key = normalize_key(key_in);
  const KeySpec& k = spec(key, origin);
  if (!type_ok(k.type, value)) {
    throw Error(ErrorCode::kInvalidConfig, origin + ": key '" + key + "' must be " +
                                               type_name(k.type) + ", got '" + value + "'");
  }
  values_[key] = value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::vector<KeyValue> entries;
  try {
    entries = read_key_values(path);
  } catch (const Error& e) {
    throw Error(e.code() == ErrorCode::kFileNotFound ? ErrorCode::kFileNotFound
                                                     : ErrorCode::kInvalidConfig,
                e.what());
  }
  for (const auto& kv : entries) {
    set(kv.key, kv.value, path.string() + ":" + std::to_string(kv.line));
  }
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& RunConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error(ErrorCode::kInvalidConfig, "missing required key '" + key + "' (" +
                                               flag_name(key) + ")");
  }
  return it->second;
}

int64_t RunConfig::get_int(const std::string& key) const {
  int64_t v = 0;
  parse_number(raw(key), &v);
  return v;
}

uint64_t RunConfig::get_uint(const std::string& key) const {
  uint64_t v = 0;
  parse_number(raw(key), &v);
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  double v = 0.0;
  parse_number(raw(key), &v);
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  bool v = false;
  parse_bool(raw(key), &v);
  return v;
}

std::string RunConfig::get_string(const std::string& key) const { return raw(key); }

}  // namespace mvdepth::cli
