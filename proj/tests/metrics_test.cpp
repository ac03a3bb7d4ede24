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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "epidiv/error.hpp"
#include "epidiv/metrics.hpp"
#include "epidiv/synth.hpp"
#include "support.hpp"

namespace epidiv {
namespace {

// Counts samples within each threshold, one comparison at a time.
std::vector<double> counting_oracle(const std::vector<Vec2>& det, const std::vector<Vec2>& gt,
                                    double window, const std::vector<double>& thresholds) {
  std::vector<double> out;
  for (double t : thresholds) {
    int hits = 0;
    for (std::size_t k = 0; k < det.size(); ++k) {
      const double dx = det[k].x() - gt[k].x();
      const double dy = det[k].y() - gt[k].y();
      if (std::sqrt(dx * dx + dy * dy) / window <= t) ++hits;
    }
    out.push_back(static_cast<double>(hits) / static_cast<double>(det.size()));
  }
  return out;
}

TEST(Pck, DefaultThresholdGrid) {
  const auto t = default_pck_thresholds();
  ASSERT_EQ(t.size(), 51u);
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_DOUBLE_EQ(t.back(), 0.5);
}

TEST(Pck, ExactDetections) {
  const std::vector<Vec2> x{Vec2(1, 2), Vec2(3, 4), Vec2(10, 0)};
  const PckCurve c = pck_curve(x, x);
  for (double v : c.values) EXPECT_EQ(v, 1.0);
}

TEST(Pck, SingleSampleStep) {
  const std::vector<Vec2> det{Vec2(4.6, 0.0)};
  const std::vector<Vec2> gt{Vec2(0.0, 0.0)};
  const std::vector<double> t{0.0, 0.05, 0.09, 0.0999, 0.1, 0.2};
  const PckCurve c = pck_curve(det, gt, 46.0, t);
  EXPECT_EQ(c.values, (std::vector<double>{0, 0, 0, 0, 1, 1}));
}

TEST(Pck, MatchesCountingOracle) {
  std::mt19937_64 rng(70);
  std::normal_distribution<double> n(0.0, 6.0);
  std::uniform_real_distribution<double> u(0.0, 46.0);
  std::vector<Vec2> det;
  std::vector<Vec2> gt;
  for (int k = 0; k < 1000; ++k) {
    gt.emplace_back(u(rng), u(rng));
    det.push_back(gt.back() + Vec2(n(rng), n(rng)));
  }
  const auto thresholds = default_pck_thresholds();
  const PckCurve c = pck_curve(det, gt);
  EXPECT_EQ(c.values, counting_oracle(det, gt, 46.0, thresholds));
  for (std::size_t k = 1; k < c.values.size(); ++k) EXPECT_GE(c.values[k], c.values[k - 1]);
}

TEST(Pck, Errors) {
  const std::vector<Vec2> none;
  const std::vector<Vec2> one{Vec2::Zero()};
  EXPECT_THROW(pck_curve(none, none), Error);
  try {
    pck_curve(none, none);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptySamples);
  }
  EXPECT_THROW(pck_curve(one, one, 0.0), Error);
}

TEST(ArgmaxKeypoints, GaussianLabelRecoversCell) {
  const std::optional<Vec2> k[] = {Vec2(12.0, 30.0), Vec2(40.0, 3.0)};
  const auto out = argmax_keypoints(gaussian_label(k, 1.5, 46, 46));
  EXPECT_EQ(out[0].position, Vec2(12.0, 30.0));
  EXPECT_EQ(out[1].position, Vec2(40.0, 3.0));
  EXPECT_EQ(out[0].confidence, 1.0);
}

TEST(ArgmaxKeypoints, ConstantTieBreak) {
  Heatmap h(std::vector<Grid>{Grid(7, 5, 0.3)});
  const auto out = argmax_keypoints(h);
  EXPECT_EQ(out[0].position, Vec2(0.0, 0.0));
  EXPECT_EQ(out[0].confidence, 0.3);
}

TEST(ArgmaxKeypoints, MatchesScanOracle) {
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> level(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    Grid g(19, 23);
    for (double& x : g.values()) x = level(rng) / 9.0;
    const auto out = argmax_keypoints(Heatmap(std::vector<Grid>{g}));
    // Row-major scan keeping the first maximum.
    double best = -1.0;
    Vec2 where;
    for (int v = 0; v < 23; ++v) {
      for (int u = 0; u < 19; ++u) {
        if (g(u, v) > best) {
          best = g(u, v);
          where = Vec2(u, v);
        }
      }
    }
    EXPECT_EQ(out[0].position, where);
    EXPECT_EQ(out[0].confidence, best);
  }
}

Rig generic_rig() {
  RigSpec spec;
  spec.count = 4;
  spec.height_jitter = 0.5;
  spec.seed = 3;
  return make_rig(spec);
}

std::vector<std::vector<std::optional<Keypoint>>> exact_detections(const Rig& rig,
                                                                   const std::vector<Vec3>& pts) {
  std::vector<std::vector<std::optional<Keypoint>>> out;
  for (const CameraModel& cam : rig) {
    std::vector<std::optional<Keypoint>> v;
    for (const Vec3& X : pts) v.push_back(Keypoint{project(cam, X), 1.0});
    out.push_back(std::move(v));
  }
  return out;
}

TEST(ReprojectionError, ExactDetectionsGiveZero) {
  const Rig rig = generic_rig();
  const auto det = exact_detections(rig, {Vec3(0.1, 0.2, 0.0), Vec3(-0.2, 0.0, 0.1)});
  const ReprojStats s = reprojection_error(rig, det);
  EXPECT_LE(s.mean, 1e-9);
  EXPECT_LE(s.std, 1e-9);
  EXPECT_EQ(s.residuals.size(), 8u);
  EXPECT_TRUE(s.excluded_channels.empty());
}

TEST(ReprojectionError, OneOffsetViewIsBounded) {
  const Rig rig = generic_rig();
  auto det = exact_detections(rig, {Vec3(0.1, 0.2, 0.0)});
  det[1][0]->position += Vec2(8.0, 0.0);
  const ReprojStats s = reprojection_error(rig, det);
  EXPECT_GT(s.mean, 0.0);
  EXPECT_LT(s.mean, 8.0);
  for (const Residual& r : s.residuals) EXPECT_LT(r.pixels, 8.0);
}

TEST(ReprojectionError, ConfidenceFloorExcludesChannel) {
  const Rig rig = generic_rig();
  auto det = exact_detections(rig, {Vec3::Zero(), Vec3(0.1, 0.0, 0.0)});
  for (std::size_t v = 1; v < 4; ++v) det[v][1]->confidence = 0.2;
  const ReprojStats s = reprojection_error(rig, det, 0.5);
  EXPECT_EQ(s.excluded_channels, (std::vector<int>{1}));
  EXPECT_EQ(s.residuals.size(), 4u);
}

TEST(ReprojectionError, PixelScaleApplied) {
  const Rig rig = generic_rig();
  auto det = exact_detections(rig, {Vec3(0.1, 0.2, 0.0)});
  det[0][0]->position += Vec2(3.0, -2.0);
  const std::vector<double> scale(4, 0.25);
  const ReprojStats a = reprojection_error(rig, det);
  const ReprojStats b = reprojection_error(rig, det, 0.0, scale);
  EXPECT_NEAR(b.mean, 0.25 * a.mean, 1e-12);
}

}  // namespace
}  // namespace epidiv
