#pragma once

#include <span>

#include <Eigen/Core>

#include "mvdepth/camera.h"
#include "mvdepth/image.h"

namespace mvdepth {

struct SampleResult {
  Eigen::VectorXd values;        // C
  bool valid = false;
  Eigen::Matrix<double, Eigen::Dynamic, 2> gradient;  // C x 2, d/d(u, v)
};

// Bilinear interpolation against implicit zeros outside the image. Continuous
// in (u, v) everywhere. The cell is chosen as (floor(u), floor(v)), so on
// integer grid lines the gradient is the right-sided one. `grad_u`/`grad_v`
// may be empty.
void interpolate_zero_padded(const FeatureMap& f, double u, double v,
                             std::span<double> out, std::span<double> grad_u,
                             std::span<double> grad_v);

// Masked sampling: coordinates outside [0, W-1] x [0, H-1] return false and
// zero value/gradient. Same gradient convention as above.
bool sample_into(const FeatureMap& f, double u, double v, std::span<double> out,
                 std::span<double> grad_u = {}, std::span<double> grad_v = {});

SampleResult bilinear_sample(const FeatureMap& f, const Pixel& x);

struct WarpResult {
  FeatureMap features;
  Mask valid;
};

// Samples f_j at reproject(k, g_ij, x, z_i(x)) for every pixel x of frame i.
WarpResult warp_feature_map(const FeatureMap& f_j, const Intrinsics& k,
                            const Pose& g_ij, const DepthMap& z_i);

}  // namespace mvdepth
