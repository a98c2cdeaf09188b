#include <random>

#include <gtest/gtest.h>

#include "mvdepth/camera.h"
#include "mvdepth/error.h"
#include "test_util.h"

namespace mvdepth {
namespace {

using testing::code_of;
using testing::test_intrinsics;

TEST(Camera, OpticalAxisHitsPrincipalPoint) {
  const Pixel p = project(test_intrinsics(), Eigen::Vector4d(0, 0, 2, 1));
  EXPECT_EQ(p, (Pixel{50, 50}));
}

TEST(Camera, ProjectDirectSubstitution) {
  EXPECT_EQ(project(test_intrinsics(), Eigen::Vector4d(1, 1, 1, 1)), (Pixel{150, 150}));
}

TEST(Camera, ProjectRejectsZeroDepth) {
  EXPECT_EQ(code_of([] { project(test_intrinsics(), Eigen::Vector4d(1, 1, 0, 1)); }),
            ErrorCode::kNonPositiveDepth);
  EXPECT_FALSE(try_project(test_intrinsics(), Vec3(1, 1, kMinDepth)).has_value());
  EXPECT_TRUE(try_project(test_intrinsics(), Vec3(1, 1, 2 * kMinDepth)).has_value());
}

TEST(Camera, BackprojectPrincipalPoint) {
  EXPECT_EQ(backproject_homogeneous(test_intrinsics(), {50, 50}, 3),
            Eigen::Vector4d(0, 0, 3, 1));
}

TEST(Camera, BackprojectInvertsProjectExample) {
  EXPECT_EQ(backproject_homogeneous(test_intrinsics(), {150, 150}, 1),
            Eigen::Vector4d(1, 1, 1, 1));
}

TEST(Camera, BackprojectRejectsNonPositiveDepth) {
  EXPECT_EQ(code_of([] { backproject(test_intrinsics(), {1, 1}, 0.0); }),
            ErrorCode::kNonPositiveDepth);
  EXPECT_EQ(code_of([] { backproject(test_intrinsics(), {1, 1}, -2.0); }),
            ErrorCode::kNonPositiveDepth);
}

TEST(Camera, ProjectBackprojectRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> px(-20, 120), depth(1e-3, 50);
  Intrinsics k = test_intrinsics();
  k.fx = 120;
  k.cx = 48.5;
  for (int i = 0; i < 100; ++i) {
    const Pixel x{px(rng), px(rng)};
    const Pixel y = project(k, backproject(k, x, depth(rng)));
    EXPECT_NEAR(y.u, x.u, 1e-9);
    EXPECT_NEAR(y.v, x.v, 1e-9);
  }
}

TEST(Camera, ReprojectIdentityIsExact) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> px(0, 99), depth(0.01, 100);
  for (int i = 0; i < 1000; ++i) {
    const Pixel x{px(rng), px(rng)};
    EXPECT_EQ(reproject(test_intrinsics(), Pose::identity(), x, depth(rng)), x);
  }
}

TEST(Camera, ReprojectTranslation) {
  const Pixel p = reproject(test_intrinsics(), Pose::from_translation({1, 0, 0}), {50, 50}, 2);
  EXPECT_NEAR(p.u, 100, 1e-12);
  EXPECT_NEAR(p.v, 50, 1e-12);
}

TEST(Camera, ReprojectBehindCamera) {
  EXPECT_EQ(code_of([] {
              reproject(test_intrinsics(), Pose::from_translation({0, 0, -3}), {50, 50}, 2);
            }),
            ErrorCode::kNonPositiveDepth);
  EXPECT_FALSE(try_reproject(test_intrinsics(), Pose::from_translation({0, 0, -3}), {50, 50}, 2)
                   .has_value());
}

TEST(Camera, ReprojectMatchesComposition) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> px(0, 99), depth(1, 5);
  const Intrinsics k = test_intrinsics();
  for (int i = 0; i < 100; ++i) {
    const Pose g = testing::random_pose(rng, 0.2, 0.1);
    const Pixel x{px(rng), px(rng)};
    const double z = depth(rng);
    const Pixel a = reproject(k, g, x, z);
    const Pixel b = project(k, g * backproject(k, x, z));
    EXPECT_NEAR(a.u, b.u, 1e-9);
    EXPECT_NEAR(a.v, b.v, 1e-9);
  }
}

TEST(Camera, ReprojectChainConsistency) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> px(0, 99), depth(1, 5);
  const Intrinsics k = test_intrinsics();
  for (int i = 0; i < 200; ++i) {
    const Pose g_ij = testing::random_pose(rng, 0.2, 0.1);
    const Pose g_jk = testing::random_pose(rng, 0.2, 0.1);
    const Pixel x{px(rng), px(rng)};
    const double z = depth(rng);
    Vec3 xj;
    const auto in_j = try_reproject(k, g_ij, x, z, &xj);
    ASSERT_TRUE(in_j.has_value());
    const Pixel chained = reproject(k, g_jk, *in_j, xj.z());
    const Pixel direct = reproject(k, g_jk * g_ij, x, z);
    EXPECT_NEAR(chained.u, direct.u, 1e-8);
    EXPECT_NEAR(chained.v, direct.v, 1e-8);
  }
}

TEST(Camera, ProjectionJacobianUnitDepth) {
  Intrinsics k = test_intrinsics();
  k.fx = k.fy = 1;
  Mat23 expected;
  expected << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ(projection_jacobian(k, {0, 0, 1}), expected);
}

TEST(Camera, ProjectionJacobianHandEvaluated) {
  Mat23 expected;
  expected << 50, 0, -50, 0, 50, 0;
  EXPECT_LT(testing::max_abs_diff(projection_jacobian(test_intrinsics(), {2, 0, 2}), expected),
            1e-12);
}

TEST(Camera, ProjectionJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> lateral(-3, 3), depth(0.5, 10);
  const Intrinsics k = test_intrinsics();
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Vec3 x(lateral(rng), lateral(rng), depth(rng));
    Mat23 n;
    for (int c = 0; c < 3; ++c) {
      Vec3 d = Vec3::Zero();
      d[c] = h;
      n.col(c) = (project(k, Vec3(x + d)).vec() - project(k, Vec3(x - d)).vec()) / (2 * h);
    }
    EXPECT_LT(testing::rel_error(projection_jacobian(k, x), n), 1e-5);
  }
}

TEST(Camera, IntrinsicsValidation) {
  Intrinsics k = test_intrinsics();
  EXPECT_NO_THROW(k.validate());
  k.fx = 0;
  EXPECT_EQ(code_of([&] { k.validate(); }), ErrorCode::kInvalidParams);
  k = test_intrinsics();
  k.cx = 100;
  EXPECT_EQ(code_of([&] { k.validate(); }), ErrorCode::kInvalidParams);
}

TEST(Camera, InBounds) {
  const Intrinsics k = test_intrinsics(10, 8);
  EXPECT_TRUE((Pixel{0, 0}).in_bounds(k));
  EXPECT_TRUE((Pixel{9, 7}).in_bounds(k));
  EXPECT_FALSE((Pixel{9.0001, 7}).in_bounds(k));
  EXPECT_FALSE((Pixel{-1e-12, 0}).in_bounds(k));
}

}  // namespace
}  // namespace mvdepth
