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

// Seeded synthetic rigs and keypoint scenes with controlled noise.

#ifndef EPIDIV_SYNTH_HPP_
#define EPIDIV_SYNTH_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "epidiv/geometry.hpp"
#include "epidiv/supervision.hpp"

namespace epidiv {

enum class Placement { kRing, kSphere };

struct RigSpec {
  int count = 4;
  Placement placement = Placement::kRing;
  double radius = 3.0;
  double height_jitter = 0.0;  ///< ring: uniform +/- offset along world z
  Vec3 target = Vec3::Zero();
  double focal_min = 800.0;
  double focal_max = 800.0;
  int image_width = 1280;
  int image_height = 960;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Cameras named cam0, cam1, ... looking at the target with world +z up.
Rig make_rig(const RigSpec& spec);

/// Deterministic displacement of one rendered peak, heatmap cells.
struct PeakOffset {
  int view = 0;
  int channel = 0;
  Vec2 delta = Vec2::Zero();
};

struct NoiseSpec {
  double peak_jitter = 0.0;        ///< per-axis std of the peak, heatmap cells
  double swap_probability = 0.0;   ///< per view and symmetric pair
  std::vector<std::pair<int, int>> symmetric_pairs;
  int clutter_blobs = 0;           ///< extra Gaussian blobs per channel
  double clutter_amplitude = 0.0;
  std::vector<PeakOffset> offsets;  ///< applied after jitter and swaps
  void validate() const;
};

struct SceneOptions {
  int width = kHeatmapSize;
  int height = kHeatmapSize;
  double crop_height = 368.0;
  /// Half-size of the square world-space box each crop frames; <= 0 picks it
  /// from the keypoint spread.
  double box_half_extent = 0.0;
  /// Render each keypoint as the image of an isotropic world-space Gaussian
  /// (first-order projection) instead of an isotropic heatmap Gaussian. The
  /// world spread is sigma heatmap cells measured at the keypoint centroid.
  /// Flattened profiles of such heatmaps agree across views.
  bool projected_profile = false;
};

struct SyntheticScene {
  SceneSnapshot snapshot;
  std::vector<Vec3> points;
  std::vector<std::vector<Vec2>> truth_image;    ///< [view][channel]
  std::vector<std::vector<Vec2>> truth_heatmap;  ///< [view][channel]
  std::vector<std::vector<Vec2>> peaks;          ///< rendered peak, [view][channel]
};

/// Renders Gaussian prediction heatmaps of projected keypoints. Crops frame a
/// fixed world-space box around the keypoint centroid so one heatmap cell
/// spans the same world extent in every view. Annotations hold the exact image
/// projections.
SyntheticScene make_scene(const Rig& rig, std::span<const Vec3> keypoints,
                          double sigma, const NoiseSpec& noise, std::uint64_t seed,
                          const SceneOptions& options = {});

}  // namespace epidiv

#endif  // EPIDIV_SYNTH_HPP_
