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

// Labeled, bootstrapping and total losses, triangulation-based pseudo labels,
// and a direct-heatmap gradient descent harness.

#ifndef EPIDIV_SUPERVISION_HPP_
#define EPIDIV_SUPERVISION_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epidiv/divergence.hpp"
#include "epidiv/error.hpp"
#include "epidiv/geometry.hpp"
#include "epidiv/heatmap.hpp"
#include "epidiv/metrics.hpp"

namespace epidiv {

/// Per-channel 2D keypoints of one view; nullopt when not observed.
using ViewKeypoints = std::vector<std::optional<Vec2>>;

struct ViewSnapshot {
  std::string camera_id;
  CropTransform crop;
  Heatmap prediction;
  std::optional<Heatmap> label;         ///< z
  std::optional<Heatmap> pseudo_label;  ///< z-hat
  ViewKeypoints annotations;            ///< image pixels
};

struct SceneSnapshot {
  int frame = 0;
  std::vector<ViewSnapshot> views;

  /// Shared (W, H, C) across every heatmap, and every camera id in `rig`.
  void validate(const Rig& rig) const;
  std::vector<Heatmap> predictions() const;
};

struct LossWeights {
  double lambda_e = 5.0;
  double lambda_p = 1.0;
  void validate() const;
};

const CameraModel& camera_by_id(const Rig& rig, const std::string& id);
/// Cameras of the snapshot views, in view order.
Rig view_cameras(const Rig& rig, const SceneSnapshot& snapshot);

struct SquaredLoss {
  double value = 0.0;
  HeatmapGradient gradient;
};

/// sum ||pred - z||^2 over every cell; gradient 2 (pred - z).
SquaredLoss labeled_loss(const Heatmap& pred, const Heatmap& z);
/// Same contract as labeled_loss against a pseudo label.
SquaredLoss bootstrap_loss(const Heatmap& pred, const Heatmap& z_hat);

struct TotalLoss {
  double total = 0.0;
  std::optional<double> labeled;    ///< L_L, absent without labels
  std::optional<double> epipolar;   ///< L_E, absent without pairs
  std::optional<double> bootstrap;  ///< L_B, absent without pseudo labels
  std::vector<PairChannelLoss> pair_records;
  std::vector<HeatmapGradient> gradients;  ///< one per view
};

/// L_L + lambda_e L_E + lambda_p L_B on the snapshot predictions.
TotalLoss total_loss(const SceneSnapshot& snapshot, std::span<const ViewPair> pairs,
                     const LossWeights& weights, const DivergenceConfig& cfg = {});

/// As above with `predictions` standing in for the snapshot's own.
TotalLoss total_loss(const SceneSnapshot& snapshot,
                     std::span<const Heatmap> predictions,
                     std::span<const ViewPair> pairs, const LossWeights& weights,
                     const DivergenceConfig& cfg = {});

struct RejectedPair {
  int i = 0;
  int j = 0;
  std::string reason;
};

struct PairSelection {
  std::vector<ViewPair> pairs;
  std::vector<RejectedPair> rejected;
};

/// All ordered view pairs whose epipolar-line spread over the heatmap extent
/// reaches `degeneracy_deg` and whose rectification is well defined.
PairSelection select_pairs(const Rig& rig, const SceneSnapshot& snapshot,
                           double degeneracy_deg = kDefaultDegeneracyDeg,
                           int oversample = 1);

/// Heatmap extent of a view, in original image pixels.
PixelRect heatmap_roi(const CropTransform& crop, int width, int height);

struct SkippedKeypoint {
  int channel = 0;
  Errc reason = Errc::kInsufficientViews;
};

struct SpatialAugmentation {
  std::vector<std::optional<Vec3>> points;  ///< per channel
  std::vector<ViewKeypoints> labels;        ///< [view][channel], image pixels
  std::vector<SkippedKeypoint> skipped;
  int dropped_out_of_bounds = 0;
};

/// Triangulates every channel annotated in at least `min_views` views and
/// projects it into all cameras. `annotations` is indexed [view][channel].
SpatialAugmentation spatial_augment(std::span<const CameraModel> cams,
                                    std::span<const ViewKeypoints> annotations,
                                    int min_views = 2);

struct TrackFrame {
  int frame = 0;
  std::optional<Vec3> point;
  std::vector<bool> inliers;  ///< per view; false also for unobserved views
  ViewKeypoints labels;       ///< per view projection, image pixels
  std::optional<Errc> failure;
};

struct TrackAugmentation {
  std::vector<TrackFrame> frames;
  int dropped_out_of_bounds = 0;
};

/// Per-frame RANSAC triangulation of one keypoint tracked in 2D across views.
/// `tracks` is indexed [view][frame]; failures are recorded per frame.
TrackAugmentation track_augment(std::span<const CameraModel> cams,
                                std::span<const ViewKeypoints> tracks,
                                double inlier_thresh_px, std::uint64_t seed,
                                int iterations = 100);

/// Argmax detections of `heatmaps` mapped to image pixels and triangulated;
/// residuals are reported in heatmap cells.
ReprojStats heatmap_reprojection(const Rig& rig, const SceneSnapshot& snapshot,
                                 std::span<const Heatmap> heatmaps,
                                 double confidence_floor = 0.0);

struct OptimizerOptions {
  int steps = 500;
  double step_size = 0.5;
  /// Initial predictions are clamped to [floor, 1 - floor] before the logit.
  double logit_floor = 1e-4;
};

struct TrajectoryRow {
  int step = 0;
  double total = 0.0;
  std::optional<double> labeled;
  std::optional<double> epipolar;
  std::optional<double> bootstrap;
  double mean_reproj_px = 0.0;
};

struct OptimizationResult {
  std::vector<TrajectoryRow> trajectory;  ///< steps + 1 rows, step 0 first
  std::vector<Heatmap> heatmaps;          ///< final predictions
};

/// Plain gradient descent on per-cell logits, heatmap = logistic(logit).
/// Throws NonFiniteLoss naming the step at which the loss stopped being finite.
OptimizationResult optimize_heatmaps(const Rig& rig, const SceneSnapshot& snapshot,
                                     std::span<const ViewPair> pairs,
                                     const LossWeights& weights,
                                     const DivergenceConfig& cfg,
                                     const OptimizerOptions& options);

void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryRow> rows);

}  // namespace epidiv

#endif  // EPIDIV_SUPERVISION_HPP_
