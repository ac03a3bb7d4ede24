// Copyright 2026 The epidiv Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "epidiv/error.hpp"
#include "epidiv/heatmap.hpp"
#include "epidiv/synth.hpp"
#include "support.hpp"

namespace epidiv {
namespace {

using testing::intrinsics;
using testing::random_camera;
using testing::random_point;

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an epidiv::Error";
  return Errc::kInvalidArgument;
}

Grid random_grid(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid g(w, h);
  for (double& x : g.values()) x = u(rng);
  return g;
}

double gaussian(const Vec2& c, double sigma, double u, double v) {
  return std::exp(-((u - c.x()) * (u - c.x()) + (v - c.y()) * (v - c.y())) /
                  (2.0 * sigma * sigma));
}

TEST(HeatmapType, ClampsOnConstruction) {
  Grid g(3, 3);
  g(0, 0) = 1.7;
  g(1, 1) = -0.4;
  g(2, 2) = std::nan("");
  const Heatmap h(std::vector<Grid>{g});
  EXPECT_EQ(h.channel(0)(0, 0), 1.0);
  EXPECT_EQ(h.channel(0)(1, 1), 0.0);
  EXPECT_EQ(h.channel(0)(2, 2), 0.0);
  EXPECT_EQ(code_of([] { Heatmap(1, 5, 1); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([] { Heatmap(std::vector<Grid>{Grid(3, 3), Grid(4, 3)}); }),
            Errc::kShapeMismatch);
}

TEST(GaussianLabel, FormulaValues) {
  const std::optional<Vec2> k[] = {Vec2(5.0, 5.0)};
  const Heatmap h = gaussian_label(k, 1.0, 11, 11);
  EXPECT_DOUBLE_EQ(h.channel(0)(5, 5), 1.0);
  EXPECT_NEAR(h.channel(0)(6, 5), 0.6065306597, 1e-9);
}

TEST(GaussianLabel, AbsentKeypointIsZero) {
  const std::optional<Vec2> k[] = {std::nullopt, Vec2(2.0, 2.0)};
  const Heatmap h = gaussian_label(k, 1.5, 8, 8);
  for (double x : h.channel(0).values()) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(h.channels(), 2);
}

TEST(GaussianLabel, IntegralMatches) {
  const std::optional<Vec2> k[] = {Vec2(22.3, 21.7)};
  const Heatmap h = gaussian_label(k, 1.5, kHeatmapSize, kHeatmapSize);
  double sum = 0.0;
  for (double x : h.channel(0).values()) sum += x;
  const double want = 2.0 * std::numbers::pi * 1.5 * 1.5;
  EXPECT_NEAR(sum, want, 0.01 * want);
}

TEST(GaussianLabel, AnisotropicReducesToIsotropic) {
  const Grid a = gaussian_channel(std::optional<Vec2>(Vec2(10.2, 7.9)), 2.0, 20, 16);
  const Grid b = gaussian_channel(Vec2(10.2, 7.9), 4.0 * Eigen::Matrix2d::Identity(), 20, 16);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a.values()[k], b.values()[k], 1e-12);
  EXPECT_EQ(code_of([] { gaussian_channel(Vec2(1, 1), Eigen::Matrix2d::Zero(), 4, 4); }),
            Errc::kInvalidArgument);
}

TEST(CropChain, IdentityWhenBoxEqualsCrop) {
  CropTransform t;
  t.h_b = 368.0;
  EXPECT_LE((crop_to_heatmap_chain(t).crop_from_image - Mat3::Identity()).cwiseAbs().maxCoeff(),
            0.0);
}

TEST(CropChain, SubstitutionExample) {
  CropTransform t;
  t.h_b = 736.0;
  t.u_x = 100.0;
  t.u_y = 50.0;
  const CropChain c = crop_to_heatmap_chain(t);
  Mat3 want;
  want << 0.5, 0, -50, 0, 0.5, -25, 0, 0, 1;
  EXPECT_LE((c.crop_from_image - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((c.heatmap_from_crop - Vec3(46.0 / 368.0, 46.0 / 368.0, 1.0).asDiagonal().toDenseMatrix())
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(CropChain, RoundTrip) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-500.0, 1500.0);
  CropTransform t{123.4, -56.7, 411.0, 3.5, -2.25, 368.0, 46.0};
  const CropChain c = crop_to_heatmap_chain(t);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec2 x(u(rng), u(rng));
    worst = std::max(worst, (apply_homography(c.image_from_crop,
                                              apply_homography(c.crop_from_image, x)) - x)
                                .norm());
    worst = std::max(worst, (apply_homography(c.image_from_heatmap(),
                                              apply_homography(c.heatmap_from_image(), x)) - x)
                                .norm());
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(CropChain, RejectsNonPositiveHeights) {
  CropTransform t;
  t.h_b = 0.0;
  EXPECT_EQ(code_of([&] { crop_to_heatmap_chain(t); }), Errc::kInvalidArgument);
}

CropTransform crop_around(const CameraModel& cam, const Vec3& center, double half) {
  const Vec2 c = project(cam, center);
  const double h_b = cam.fy() * 2.0 * half / cam.depth(center);
  return {c.x() - 0.5 * h_b, c.y() - 0.5 * h_b, h_b, 0.0, 0.0, 368.0, 46.0};
}

TEST(RectifiedPair, SideBySideIdenticalCameras) {
  const Mat3 K = intrinsics(800, 800, 640, 480);
  const CameraModel a("a", K, Mat3::Identity(), Vec3(0, 0, 0));
  const CameraModel b("b", K, Mat3::Identity(), Vec3(0.5, 0, 0));
  const CropTransform crop{400.0, 300.0, 368.0, 0.0, 0.0, 368.0, 46.0};
  const RectifiedPairGeometry g = rectified_pair(a, b, crop, crop);
  EXPECT_NEAR(g.a, 1.0, 1e-12);
  EXPECT_NEAR(g.b, 0.0, 1e-9);
  // R_n = I, so each chain is the crop chain followed by a pure translation.
  for (const Mat3& chain : {g.chain_i, g.chain_j}) {
    EXPECT_NEAR(chain(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(chain(1, 1), 1.0, 1e-12);
    EXPECT_NEAR(chain(0, 1), 0.0, 1e-12);
    EXPECT_NEAR(chain(2, 0), 0.0, 1e-15);
    EXPECT_NEAR(chain(2, 1), 0.0, 1e-15);
  }
}

TEST(RectifiedPair, FocalRatioGivesScale) {
  const CameraModel a("a", intrinsics(1600, 1600, 640, 480), Mat3::Identity(), Vec3(0, 0, 0));
  const CameraModel b("b", intrinsics(800, 800, 640, 480), Mat3::Identity(), Vec3(0.5, 0, 0));
  const CropTransform crop{400.0, 300.0, 368.0, 0.0, 0.0, 368.0, 46.0};
  const RectifiedPairGeometry g = rectified_pair(a, b, crop, crop);
  EXPECT_NEAR(g.a, 2.0, 1e-12);
  // b follows the closed form with the chosen rectified box offsets.
  const double k = 46.0 / 368.0;
  const double want_b = k * ((g.rect_offset_j.y() - 480.0) * 2.0 + 480.0 - g.rect_offset_i.y());
  EXPECT_NEAR(g.b, want_b, 1e-9);
}

TEST(RectifiedPair, FundamentalSparsityAndExactness) {
  const Mat3 Ki = intrinsics(900, 950, 610, 470);
  const Mat3 Kj = intrinsics(700, 720, 650, 500);
  const Mat3 F = rectified_fundamental(Ki, Kj);
  EXPECT_EQ(F(0, 0), 0.0);
  EXPECT_EQ(F(0, 1), 0.0);
  EXPECT_EQ(F(0, 2), 0.0);
  EXPECT_EQ(F(1, 0), 0.0);
  EXPECT_EQ(F(2, 0), 0.0);
  EXPECT_EQ(F(1, 1), 0.0);
  // Same rectified orientation, baseline along x: the textbook construction.
  const Vec3 e_x(1.0, 0.0, 0.0);
  const Mat3 textbook = Kj.inverse().transpose() * skew(e_x) * Ki.inverse();
  EXPECT_LE((F - textbook).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RectifiedPair, RowCorrespondenceOnRandomRigs) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> jitter(0.6, 1.5);
  double worst = 0.0;
  int tested = 0;
  for (int rig = 0; rig < 10; ++rig) {
    const CameraModel a = random_camera(rng, "a");
    const CameraModel b = random_camera(rng, "b");
    CropTransform ci = crop_around(a, Vec3::Zero(), 0.8 * jitter(rng));
    CropTransform cj = crop_around(b, Vec3::Zero(), 0.8 * jitter(rng));
    ci.w_x = 3.0;
    cj.w_y = -4.0;
    RectifiedPairGeometry g;
    try {
      g = rectified_pair(a, b, ci, cj);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), Errc::kEpipoleInImage);
      continue;
    }
    const Mat3 hi = g.chain_i * crop_to_heatmap_chain(ci).heatmap_from_image();
    const Mat3 hj = g.chain_j * crop_to_heatmap_chain(cj).heatmap_from_image();
    for (int k = 0; k < 100; ++k) {
      const Vec3 X = random_point(rng);
      const double vi = apply_homography(hi, project(a, X)).y();
      const double vj = apply_homography(hj, project(b, X)).y();
      worst = std::max(worst, std::abs(vi - (g.a * vj + g.b)));
    }
    ++tested;
  }
  EXPECT_GE(tested, 5);
  EXPECT_LE(worst, 0.05);
}

TEST(RectifiedPair, RectifiedImagesSatisfyRectifiedFundamental) {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 20; ++k) {
    const CameraModel a = random_camera(rng, "a");
    const CameraModel b = random_camera(rng, "b");
    const CropTransform ci = crop_around(a, Vec3::Zero(), 1.0);
    const CropTransform cj = crop_around(b, Vec3::Zero(), 1.0);
    RectifiedPairGeometry g;
    try {
      g = rectified_pair(a, b, ci, cj);
    } catch (const Error&) {
      continue;
    }
    const Vec3 X = random_point(rng);
    const Vec3 xi = apply_homography(g.rectify_i, project(a, X)).homogeneous();
    const Vec3 xj = apply_homography(g.rectify_j, project(b, X)).homogeneous();
    EXPECT_LE(std::abs(xj.dot(g.fundamental * xi)), 1e-9);
  }
}

TEST(RectifiedPair, OversampleKeepsScaleFactor) {
  std::mt19937_64 rng(34);
  const CameraModel a = random_camera(rng, "a");
  const CameraModel b = random_camera(rng, "b");
  const CropTransform ci = crop_around(a, Vec3::Zero(), 1.0);
  const CropTransform cj = crop_around(b, Vec3::Zero(), 0.7);
  const RectifiedPairGeometry g1 = rectified_pair(a, b, ci, cj);
  const RectifiedPairGeometry g3 = rectified_pair(a, b, ci, cj, kHeatmapSize, kHeatmapSize, 3);
  EXPECT_NEAR(g1.a, g3.a, 1e-12);
  EXPECT_NEAR(3.0 * g1.b, g3.b, 1e-9);
  EXPECT_GE(g3.height, 3 * g1.height - 4);
  EXPECT_EQ(code_of([&] { rectified_pair(a, b, ci, cj, 46, 46, 0); }), Errc::kInvalidArgument);
}

TEST(RectifiedPair, EpipoleInImageRejected) {
  // b straight ahead of a: a's epipole is its principal point.
  const Mat3 K = intrinsics(800, 800, 640, 480);
  const CameraModel a("a", K, Mat3::Identity(), Vec3(0, 0, 0));
  const CameraModel b("b", K, testing::look_at_rotation(Vec3(0.3, 0, 4), Vec3(0, 0, 0)),
                      Vec3(0.3, 0, 4));
  const CropTransform crop{640 - 184, 480 - 184, 368.0, 0.0, 0.0, 368.0, 46.0};
  EXPECT_EQ(code_of([&] { rectified_pair(a, b, crop, crop); }), Errc::kEpipoleInImage);
}

TEST(Warp, IdentityIsBitExact) {
  std::mt19937_64 rng(35);
  const Grid g = random_grid(rng, 17, 11);
  EXPECT_EQ(warp(g, Mat3::Identity(), 17, 11), g);
}

TEST(Warp, IntegerTranslation) {
  std::mt19937_64 rng(36);
  const Grid g = random_grid(rng, 10, 9);
  Mat3 T = Mat3::Identity();
  T(0, 2) = 2.0;
  T(1, 2) = 3.0;
  const Grid out = warp(g, T, 10, 9);
  for (int v = 0; v < 9; ++v) {
    for (int u = 0; u < 10; ++u) {
      const double want = (u >= 2 && v >= 3) ? g(u - 2, v - 3) : 0.0;
      EXPECT_EQ(out(u, v), want) << u << "," << v;
    }
  }
}

TEST(Warp, SingularHomography) {
  EXPECT_EQ(code_of([] { warp(Grid(4, 4), Mat3::Zero(), 4, 4); }), Errc::kSingularHomography);
}

TEST(Warp, RoundTripAgainstAnalyticGaussian) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec2 c(22.6, 23.3);
  const double sigma = 6.0;
  const Grid g = gaussian_channel(std::optional<Vec2>(c), sigma, 46, 46);
  for (int trial = 0; trial < 10; ++trial) {
    const double theta = 0.2 * u(rng);
    const double s = 1.0 + 0.1 * u(rng);
    Mat3 A;
    A << s * std::cos(theta), -s * std::sin(theta), 2.0 * u(rng),
         s * std::sin(theta), s * std::cos(theta), 2.0 * u(rng),
         2e-4 * u(rng), 2e-4 * u(rng), 1.0;
    // Conjugate about the center so the interior stays in view.
    Mat3 to_center = Mat3::Identity();
    to_center(0, 2) = -22.5;
    to_center(1, 2) = -22.5;
    const Mat3 H = to_center.inverse() * A * to_center;
    const Grid back = warp(warp(g, H, 46, 46), H.inverse(), 46, 46);
    double worst = 0.0;
    for (int v = 10; v < 36; ++v) {
      for (int x = 10; x < 36; ++x) {
        worst = std::max(worst, std::abs(back(x, v) - gaussian(c, sigma, x, v)));
      }
    }
    EXPECT_LE(worst, 0.02) << "trial " << trial;
  }
}

TEST(Warp, ValueRangeAndDeterminism) {
  std::mt19937_64 rng(38);
  const Grid g = random_grid(rng, 30, 30);
  Mat3 H;
  H << 1.3, 0.2, -3, -0.1, 0.9, 2, 1e-3, -2e-3, 1;
  const Grid a = warp(g, H, 40, 35);
  const Grid b = warp(g, H, 40, 35);
  EXPECT_EQ(a, b);
  for (double x : a.values()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(Warp, BackwardIsAdjoint) {
  // <warp(x), y> == <x, warp_backward(y)> for a linear (unclamped) warp.
  std::mt19937_64 rng(39);
  std::uniform_real_distribution<double> small(0.0, 0.4);
  Grid x(20, 18);
  for (double& e : x.values()) e = small(rng);
  Grid y(25, 22);
  for (double& e : y.values()) e = small(rng) - 0.2;
  Mat3 H;
  H << 1.1, 0.15, 1.5, -0.2, 0.95, 2.5, 5e-4, 1e-3, 1;
  const Grid wx = warp(x, H, 25, 22);
  const Grid wty = warp_backward(y, H, 20, 18);
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t k = 0; k < wx.size(); ++k) lhs += wx.values()[k] * y.values()[k];
  for (std::size_t k = 0; k < x.size(); ++k) rhs += x.values()[k] * wty.values()[k];
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(BilinearSample, ZeroPaddedSupport) {
  Grid g(2, 2, 1.0);
  EXPECT_DOUBLE_EQ(bilinear_sample(g, 0.5, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(bilinear_sample(g, -0.5, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(bilinear_sample(g, -1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(bilinear_sample(g, 2.0, 0.0), 0.0);
}

TEST(RowMax, Examples) {
  Grid g(2, 2);
  g(0, 0) = 0.1;
  g(1, 0) = 0.9;
  g(0, 1) = 0.3;
  g(1, 1) = 0.2;
  const RowMax r = row_max(g);
  EXPECT_EQ(r.values, (FlatDistribution{0.9, 0.3}));
  EXPECT_EQ(r.argmax, (std::vector<int>{1, 0}));

  const RowMax c = row_max(Grid(5, 3, 0.5));
  EXPECT_EQ(c.values, (FlatDistribution{0.5, 0.5, 0.5}));
  EXPECT_EQ(c.argmax, (std::vector<int>{0, 0, 0}));
}

TEST(RowMax, BruteForceScan) {
  std::mt19937_64 rng(40);
  std::uniform_int_distribution<int> level(0, 4);
  Grid g(31, 23);
  for (double& x : g.values()) x = 0.25 * level(rng);  // plenty of ties
  const RowMax r = row_max(g);
  for (int v = 0; v < g.height(); ++v) {
    double best = -1.0;
    int where = -1;
    for (int u = g.width() - 1; u >= 0; --u) {
      if (g(u, v) >= best) {
        best = g(u, v);
        where = u;
      }
    }
    EXPECT_EQ(r.values[static_cast<std::size_t>(v)], best);
    EXPECT_EQ(r.argmax[static_cast<std::size_t>(v)], where);
  }
}

TEST(RowMax, IdentityWarpInvariant) {
  std::mt19937_64 rng(41);
  const Grid g = random_grid(rng, 12, 9);
  EXPECT_EQ(row_max(warp(g, Mat3::Identity(), 12, 9)).values, row_max(g).values);
}

// Heatmap-like input: mostly zero with a few bumps, so many rows tie at 0.
Grid sparse_grid(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid g(w, h);
  for (int k = 0; k < 3; ++k) {
    const Vec2 c(u(rng) * (w - 1), u(rng) * (h - 1));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double value = gaussian(c, 1.5, x, y);
        if (value > 1e-3) g(x, y) = std::max(g(x, y), value);
      }
    }
  }
  return g;
}

TEST(WarpedRowMax, MatchesWarpThenRowMaxBitwise) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> jitter(0.6, 1.5);
  int pairs = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const CameraModel a = random_camera(rng, "a");
    const CameraModel b = random_camera(rng, "b");
    const CropTransform ci = crop_around(a, Vec3::Zero(), 0.8 * jitter(rng));
    const CropTransform cj = crop_around(b, Vec3::Zero(), 0.8 * jitter(rng));
    RectifiedPairGeometry g;
    try {
      g = rectified_pair(a, b, ci, cj, kHeatmapSize, kHeatmapSize, 1 + trial % 3);
    } catch (const Error&) {
      continue;
    }
    ++pairs;
    for (const Mat3& H : {g.chain_i, g.chain_j}) {
      const Grid in = trial % 2 ? sparse_grid(rng, kHeatmapSize, kHeatmapSize)
                                : random_grid(rng, kHeatmapSize, kHeatmapSize);
      const RowMax fast = warped_row_max(in, H, g.width, g.height);
      const RowMax slow = row_max(warp(in, H, g.width, g.height));
      ASSERT_EQ(fast.values, slow.values);
      ASSERT_EQ(fast.argmax, slow.argmax);
    }
  }
  EXPECT_GE(pairs, 20);
}

TEST(WarpedRowMax, PartialSupportAndEmptyRows) {
  std::mt19937_64 rng(43);
  const Grid in = random_grid(rng, 20, 15);
  Mat3 H;
  H << 1.3, 0.2, 25.0, -0.1, 0.9, 30.0, 1e-3, -2e-3, 1.0;  // support hangs off the grid
  const RowMax fast = warped_row_max(in, H, 40, 35);
  const RowMax slow = row_max(warp(in, H, 40, 35));
  EXPECT_EQ(fast.values, slow.values);
  EXPECT_EQ(fast.argmax, slow.argmax);
  EXPECT_EQ(fast.values.front(), 0.0);
  EXPECT_EQ(fast.argmax.front(), 0);
}

TEST(WarpedRowMax, BackwardMatchesSparseWarpBackward) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> col(0, 39);
  Mat3 H;
  H << 1.1, 0.15, 1.5, -0.2, 0.95, 2.5, 5e-4, 1e-3, 1;
  std::vector<double> rows(30);
  std::vector<int> argmax(30);
  Grid dense(40, 30);
  for (int v = 0; v < 30; ++v) {
    rows[static_cast<std::size_t>(v)] = v % 7 == 0 ? 0.0 : u(rng);
    argmax[static_cast<std::size_t>(v)] = col(rng);
    dense(argmax[static_cast<std::size_t>(v)], v) += rows[static_cast<std::size_t>(v)];
  }
  EXPECT_EQ(warped_row_max_backward(rows, argmax, H, 20, 18), warp_backward(dense, H, 20, 18));
  EXPECT_EQ(code_of([&] { warped_row_max_backward(rows, {}, H, 20, 18); }), Errc::kShapeMismatch);
}

TEST(ResampleFlat, Examples) {
  const std::vector<double> q{0.0, 1.0, 0.0};
  EXPECT_EQ(resample_flat(q, 1.0, 0.0, 3), q);
  const FlatDistribution half = resample_flat(q, 1.0, 0.5, 3);
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  EXPECT_DOUBLE_EQ(half[1], 0.5);
  EXPECT_DOUBLE_EQ(half[2], 0.0);
  EXPECT_EQ(code_of([&] { resample_flat(q, 0.0, 1.0, 3); }), Errc::kZeroScale);
}

TEST(ResampleFlat, RampClosedForm) {
  std::vector<double> ramp(46);
  for (int k = 0; k < 46; ++k) ramp[static_cast<std::size_t>(k)] = k / 45.0;
  const FlatDistribution out = resample_flat(ramp, 2.0, 0.0, 46);
  for (int v = 0; v < 46; ++v) {
    const double pos = 2.0 * v;
    const double want = pos <= 45.0 ? pos / 45.0 : 0.0;
    EXPECT_NEAR(out[static_cast<std::size_t>(v)], want, 1e-12);
  }
}

TEST(ResampleFlat, BackwardIsAdjoint) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> q(40);
  std::vector<double> y(33);
  for (double& x : q) x = u(rng);
  for (double& x : y) x = u(rng);
  const double a = 1.37;
  const double b = -3.2;
  const FlatDistribution fq = resample_flat(q, a, b, 33);
  const std::vector<double> bt = resample_flat_backward(y, a, b, 40);
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) lhs += fq[k] * y[k];
  for (std::size_t k = 0; k < q.size(); ++k) rhs += q[k] * bt[k];
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(TransferOracle, RectifiedFundamentalBroadcastsRowMax) {
  std::mt19937_64 rng(43);
  const Grid P = random_grid(rng, 12, 10);
  const Mat3 F = rectified_fundamental(Mat3::Identity(), Mat3::Identity());
  const Grid out = direct_transfer_oracle(P, F, 12, 10, 53);
  const RowMax r = row_max(P);
  for (int v = 0; v < 10; ++v) {
    for (int u = 0; u < 12; ++u) {
      // 53 samples over the 13-wide support land on every integer column.
      EXPECT_NEAR(out(u, v), r.values[static_cast<std::size_t>(v)], 1e-12);
    }
  }
}

TEST(TransferOracle, ZerosAndPrecondition) {
  const Mat3 F = rectified_fundamental(Mat3::Identity(), Mat3::Identity());
  const Grid out = direct_transfer_oracle(Grid(8, 8), F, 8, 8, 32);
  for (double x : out.values()) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(code_of([&] { direct_transfer_oracle(Grid(8, 8), F, 8, 8, 31); }),
            Errc::kInvalidArgument);
}

TEST(TransferOracle, ConstantAlongEpipolarLines) {
  std::mt19937_64 rng(44);
  RigSpec spec;
  spec.count = 2;
  spec.height_jitter = 0.5;
  spec.seed = 5;
  const Rig rig = make_rig(spec);
  SceneOptions opt;
  const std::vector<Vec3> points{Vec3(0.1, -0.05, 0.2)};
  const SyntheticScene scene = make_scene(rig, points, 2.0, {}, 3, opt);
  const Grid& P_j = scene.snapshot.views[1].prediction.channel(0);
  const Mat3 F = heatmap_fundamental(rig[0], rig[1], scene.snapshot.views[0].crop,
                                     scene.snapshot.views[1].crop);
  const Grid out = direct_transfer_oracle(P_j, F, 46, 46, 4 * 46 * 10);
  // Walk along lines in view i through random pixels: points on one epipolar
  // line share the transferred value.
  const Mat3 Fji = F.transpose();  // maps x_j to lines in view i
  std::uniform_real_distribution<double> u(5.0, 40.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Vec2 x_i(u(rng), u(rng));
    const Line2 in_j = epipolar_line(F, x_i);
    // Any point of that line in view j maps back to a line in view i through x_i.
    const Vec2 x_j = -in_j.c() * Vec2(in_j.a(), in_j.b()) + 3.0 * in_j.direction();
    const Line2 back = epipolar_line(Fji, x_j);
    const Vec2 other = x_i + 6.0 * back.direction();
    if (other.x() < 0 || other.y() < 0 || other.x() > 45 || other.y() > 45) continue;
    worst = std::max(worst, std::abs(transfer_at(P_j, F, x_i, 4000) -
                                     transfer_at(P_j, F, other, 4000)));
  }
  EXPECT_LE(worst, 0.02);
  EXPECT_GT(*std::max_element(out.values().begin(), out.values().end()), 0.5);
}

}  // namespace
}  // namespace epidiv
