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

// Accuracy (PCK) and precision (reprojection error) evaluation.

#ifndef EPIDIV_METRICS_HPP_
#define EPIDIV_METRICS_HPP_

#include <optional>
#include <span>
#include <vector>

#include "epidiv/geometry.hpp"
#include "epidiv/heatmap.hpp"

namespace epidiv {

struct PckCurve {
  std::vector<double> thresholds;  ///< fractions of the detection window width
  std::vector<double> values;      ///< fraction of samples within each threshold
};

/// 0.00, 0.01, ..., 0.50.
std::vector<double> default_pck_thresholds();

PckCurve pck_curve(std::span<const Vec2> detections, std::span<const Vec2> truths,
                   double window_width = kHeatmapSize,
                   std::span<const double> thresholds = {});

struct Keypoint {
  Vec2 position;
  double confidence = 0.0;
};

/// Per channel grid argmax (row-major first on ties) with its peak value.
std::vector<Keypoint> argmax_keypoints(const Heatmap& h);

struct Residual {
  int view = 0;
  int channel = 0;
  double pixels = 0.0;
};

struct ReprojStats {
  double mean = 0.0;
  double std = 0.0;
  std::vector<Residual> residuals;
  std::vector<int> excluded_channels;  ///< fewer than two qualifying views
};

/// `detections[view][channel]` in image pixels of `cams[view]`. Each channel
/// is triangulated (unweighted DLT, no RANSAC) from views whose confidence is
/// at least `confidence_floor`, then reprojected into those views. Residuals
/// are multiplied by `pixel_scale[view]` when given, e.g. to report them in
/// heatmap cells.
ReprojStats reprojection_error(
    std::span<const CameraModel> cams,
    const std::vector<std::vector<std::optional<Keypoint>>>& detections,
    double confidence_floor = 0.0, std::span<const double> pixel_scale = {});

}  // namespace epidiv

#endif  // EPIDIV_METRICS_HPP_
