#include "mvdepth/io.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace mvdepth {
namespace {

std::string where(const fs::path& path, int line) {
  return path.string() + ":" + std::to_string(line);
}

bool parse_double(std::string_view s, double* out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

template <typename Int>
bool parse_int(std::string_view s, Int* out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::ifstream open_input(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::kFileNotFound, "cannot write " + path.string());
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<TrajectoryRecord> read_trajectory(const fs::path& path,
                                              std::vector<std::string>* warnings) {
  auto in = open_input(path);
  std::vector<TrajectoryRecord> records;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream tokens{std::string(body)};
    std::vector<std::string> fields;
    for (std::string f; tokens >> f;) fields.push_back(f);
    if (fields.size() != 8) {
      throw Error(ErrorCode::kFormatError, where(path, number) + ": expected 8 fields, got " +
                                               std::to_string(fields.size()));
    }
    double v[8];
    for (int i = 0; i < 8; ++i) {
      if (!parse_double(fields[i], &v[i]) || !std::isfinite(v[i])) {
        throw Error(ErrorCode::kFormatError,
                    where(path, number) + ": bad number '" + fields[i] + "'");
      }
    }
    TrajectoryRecord r;
    r.timestamp = v[0];
    r.translation = Vec3(v[1], v[2], v[3]);
    r.orientation = Eigen::Quaterniond(v[7], v[4], v[5], v[6]);
    const double norm = r.orientation.norm();
    if (std::abs(norm - 1.0) > 1e-9) {
      if (std::abs(norm - 1.0) > kQuaternionRepairTolerance) {
        throw Error(ErrorCode::kNonUnitQuaternion,
                    where(path, number) + ": quaternion norm " + format_double(norm));
      }
      r.orientation.normalize();
      if (warnings) {
        warnings->push_back(where(path, number) + ": normalized quaternion of norm " +
                            format_double(norm));
      }
    }
    records.push_back(r);
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return records;
}

void write_trajectory(const std::vector<TrajectoryRecord>& records, const fs::path& path) {
  auto out = open_output(path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& r : records) {
    const auto& q = r.orientation;
    const double v[8] = {r.timestamp, r.translation.x(), r.translation.y(), r.translation.z(),
                         q.x(), q.y(), q.z(), q.w()};
    for (int i = 0; i < 8; ++i) out << (i ? " " : "") << format_double(v[i]);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kFileNotFound, "failed writing " + path.string());
}

Trajectory to_trajectory(const std::vector<TrajectoryRecord>& records) {
  Trajectory t;
  t.reserve(records.size());
  for (const auto& r : records) {
    t.push_back({r.timestamp, Pose(r.orientation.normalized().toRotationMatrix(), r.translation)});
  }
  return t;
}

std::vector<TrajectoryRecord> to_records(const Trajectory& trajectory) {
  std::vector<TrajectoryRecord> out;
  out.reserve(trajectory.size());
  for (const auto& s : trajectory) {
    Eigen::Quaterniond q(s.pose.rotation());
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    out.push_back({s.timestamp, s.pose.translation(), q});
  }
  return out;
}

namespace {

struct PngFile {
  FILE* fp = nullptr;
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
};

void write_gray16(const fs::path& path, png_bytepp rows, int w, int h) {
  PngFile file;
  file.fp = std::fopen(path.c_str(), "wb");
  if (!file.fp) throw Error(ErrorCode::kFileNotFound, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kFormatError, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

size_t write_depth16(const DepthMap& depth, const fs::path& path, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidParams, "depth scale must be positive");
  const int h = depth.height(), w = depth.width();
  std::vector<png_byte> buffer(static_cast<size_t>(h) * w * 2);
  std::vector<png_bytep> rows(h);
  size_t clamped = 0;
  for (int y = 0; y < h; ++y) {
    rows[y] = buffer.data() + static_cast<size_t>(y) * w * 2;
    for (int x = 0; x < w; ++x) {
      uint32_t s = 0;
      if (depth.valid(y, x)) {
        const double v = std::round(depth(y, x) * scale);
        if (v > 65535.0) {
          s = 65535;
          ++clamped;
        } else {
          // Tiny depths would collide with the invalid sentinel.
          s = static_cast<uint32_t>(std::max(v, 1.0));
        }
      }
      rows[y][2 * x] = static_cast<png_byte>(s >> 8);  // PNG is big-endian
      rows[y][2 * x + 1] = static_cast<png_byte>(s & 0xff);
    }
  }

  write_gray16(path, rows.data(), w, h);
  return clamped;
}

DepthMap read_depth16(const fs::path& path, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidParams, "depth scale must be positive");
  PngFile file;
  file.fp = std::fopen(path.c_str(), "rb");
  if (!file.fp) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::kFormatError, path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kFormatError, "libpng failed reading " + path.string());
  }
  png_init_io(png, file.fp);
  png_set_sig_bytes(png, 8);
  png_read_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int bits = png_get_bit_depth(png, info);
  const int type = png_get_color_type(png, info);
  if (bits != 16 || type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kFormatError, path.string() + " is not a 16-bit grayscale PNG");
  }
  png_bytepp rows = png_get_rows(png, info);
  DepthMap depth(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const uint32_t s = (uint32_t{rows[y][2 * x]} << 8) | rows[y][2 * x + 1];
      if (s != 0) depth.set(y, x, s / scale);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return depth;
}

namespace {

constexpr char kGridMagic[4] = {'V', '2', 'D', 'G'};

void put_u32(std::ostream& out, uint32_t v) {
  const char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                     char((v >> 24) & 0xff)};
  out.write(b, 4);
}

uint32_t get_u32(const unsigned char* b) {
  return uint32_t{b[0]} | (uint32_t{b[1]} << 8) | (uint32_t{b[2]} << 16) | (uint32_t{b[3]} << 24);
}

}  // namespace

void write_grid(const Grid& grid, const fs::path& path) {
  const size_t n = size_t{grid.h} * grid.w * grid.d * grid.c;
  if (grid.data.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "grid data size does not match its dimensions");
  }
  auto out = open_output(path, std::ios::binary);
  out.write(kGridMagic, 4);
  for (uint32_t v : {grid.h, grid.w, grid.d, grid.c}) put_u32(out, v);
  std::vector<unsigned char> bytes(n * 4);
  for (size_t i = 0; i < n; ++i) {
    const uint32_t bits = std::bit_cast<uint32_t>(grid.data[i]);
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kFileNotFound, "failed writing " + path.string());
}

Grid read_grid(const fs::path& path) {
  auto in = open_input(path, std::ios::binary);
  unsigned char header[20];
  if (!in.read(reinterpret_cast<char*>(header), 20) || std::memcmp(header, kGridMagic, 4) != 0) {
    throw Error(ErrorCode::kFormatError, path.string() + ": missing V2DG header");
  }
  Grid g;
  g.h = get_u32(header + 4);
  g.w = get_u32(header + 8);
  g.d = get_u32(header + 12);
  g.c = get_u32(header + 16);
  const uint64_t n = uint64_t{g.h} * g.w * g.d * g.c;
  if (n > (uint64_t{1} << 32)) throw Error(ErrorCode::kFormatError, path.string() + ": grid too large");
  std::vector<unsigned char> bytes(n * 4);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
    throw Error(ErrorCode::kFormatError, path.string() + ": truncated grid data");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kFormatError, path.string() + ": trailing bytes after grid data");
  }
  g.data.resize(n);
  for (size_t i = 0; i < n; ++i) g.data[i] = std::bit_cast<float>(get_u32(bytes.data() + 4 * i));
  return g;
}

Grid to_grid(const DepthMap& depth) {
  Grid g{uint32_t(depth.height()), uint32_t(depth.width()), 1, 1, {}};
  g.data.resize(depth.size());
  for (size_t i = 0; i < depth.size(); ++i) {
    g.data[i] = depth.valid_at(i) ? static_cast<float>(depth.at(i))
                                  : std::numeric_limits<float>::quiet_NaN();
  }
  return g;
}

Grid to_grid(const FeatureMap& features) {
  Grid g{uint32_t(features.height()), uint32_t(features.width()), 1,
         uint32_t(features.channels()), {}};
  const auto data = features.data();
  g.data.assign(data.begin(), data.end());
  return g;
}

Grid to_grid(const MatchVolume& volume) {
  Grid g{uint32_t(volume.height()), uint32_t(volume.width()), uint32_t(volume.depth()), 1, {}};
  const auto s = volume.scores();
  g.data.resize(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    g.data[i] = std::isfinite(s[i]) ? static_cast<float>(s[i])
                                    : -std::numeric_limits<float>::infinity();
  }
  return g;
}

Grid to_grid(const ResidualFlowField& flow) {
  Grid g{uint32_t(flow.height()), uint32_t(flow.width()), 1, 4, {}};
  g.data.reserve(size_t{g.h} * g.w * 4);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.valid(y, x)) {
        g.data.insert(g.data.end(), 4, nan);
        continue;
      }
      const Vec2& f = flow.flow(y, x);
      const Vec2& c = flow.confidence(y, x);
      for (double v : {f.x(), f.y(), c.x(), c.y()}) g.data.push_back(static_cast<float>(v));
    }
  }
  return g;
}

DepthMap depth_from_grid(const Grid& grid) {
  if (grid.d != 1 || grid.c != 1) {
    throw Error(ErrorCode::kFormatError, "depth grid must have D = C = 1");
  }
  DepthMap depth(int(grid.h), int(grid.w));
  for (size_t i = 0; i < depth.size(); ++i) depth.set_at(i, grid.data[i]);
  return depth;
}

FeatureMap features_from_grid(const Grid& grid) {
  if (grid.d != 1 || grid.c < 1) {
    throw Error(ErrorCode::kFormatError, "feature grid must have D = 1 and C >= 1");
  }
  FeatureMap f(int(grid.h), int(grid.w), int(grid.c));
  std::copy(grid.data.begin(), grid.data.end(), f.data().begin());
  return f;
}

std::vector<KeyValue> read_key_values(const fs::path& path) {
  auto in = open_input(path);
  std::vector<KeyValue> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kFormatError, where(path, number) + ": expected key = value");
    }
    KeyValue kv{std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))),
                number};
    if (kv.key.empty()) throw Error(ErrorCode::kFormatError, where(path, number) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

void write_scene_description(const SceneParams& p, const fs::path& path) {
  auto out = open_output(path);
  out << "width = " << p.width << '\n'
      << "height = " << p.height << '\n'
      << "focal = " << format_double(p.focal) << '\n'
      << "depth_min = " << format_double(p.depth_min) << '\n'
      << "depth_max = " << format_double(p.depth_max) << '\n'
      << "fronto_planes = " << p.fronto_planes << '\n'
      << "tilted_planes = " << p.tilted_planes << '\n'
      << "spheres = " << p.spheres << '\n'
      << "background = " << (p.background ? "true" : "false") << '\n'
      << "background_depth = " << format_double(p.background_depth) << '\n'
      << "trajectory = " << to_string(p.shape) << '\n'
      << "frames = " << p.frames << '\n'
      << "step = " << format_double(p.step) << '\n'
      << "arc_step_deg = " << format_double(p.arc_step_deg) << '\n'
      << "frame_interval = " << format_double(p.frame_interval) << '\n'
      << "seed = " << p.seed << '\n';
  if (!out) throw Error(ErrorCode::kFileNotFound, "failed writing " + path.string());
}

SceneParams read_scene_description(const fs::path& path) {
  SceneParams p;
  for (const auto& kv : read_key_values(path)) {
    auto bad = [&] {
      return Error(ErrorCode::kFormatError,
                   where(path, kv.line) + ": bad value '" + kv.value + "' for " + kv.key);
    };
    auto dbl = [&](double* v) {
      if (!parse_double(kv.value, v)) throw bad();
    };
    auto integer = [&](int* v) {
      if (!parse_int(kv.value, v)) throw bad();
    };
    if (kv.key == "width") integer(&p.width);
    else if (kv.key == "height") integer(&p.height);
    else if (kv.key == "focal") dbl(&p.focal);
    else if (kv.key == "depth_min") dbl(&p.depth_min);
    else if (kv.key == "depth_max") dbl(&p.depth_max);
    else if (kv.key == "fronto_planes") integer(&p.fronto_planes);
    else if (kv.key == "tilted_planes") integer(&p.tilted_planes);
    else if (kv.key == "spheres") integer(&p.spheres);
    else if (kv.key == "background") {
      if (kv.value == "true" || kv.value == "1") p.background = true;
      else if (kv.value == "false" || kv.value == "0") p.background = false;
      else throw bad();
    } else if (kv.key == "background_depth") dbl(&p.background_depth);
    else if (kv.key == "trajectory") {
      try {
        p.shape = parse_trajectory_shape(kv.value);
      } catch (const Error&) {
        throw bad();
      }
    } else if (kv.key == "frames") integer(&p.frames);
    else if (kv.key == "step") dbl(&p.step);
    else if (kv.key == "arc_step_deg") dbl(&p.arc_step_deg);
    else if (kv.key == "frame_interval") dbl(&p.frame_interval);
    else if (kv.key == "seed") {
      if (!parse_int(kv.value, &p.seed)) throw bad();
    } else {
      throw Error(ErrorCode::kFormatError, where(path, kv.line) + ": unknown key " + kv.key);
    }
  }
  return p;
}

}  // namespace mvdepth
