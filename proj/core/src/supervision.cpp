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

#include "epidiv/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace epidiv {
namespace {

SquaredLoss squared_loss(const Heatmap& pred, const Heatmap& target) {
  if (!pred.same_shape(target)) {
    throw Error(Errc::kShapeMismatch, "prediction and target heatmaps differ in shape");
  }
  SquaredLoss out;
  out.gradient = zero_gradient(pred);
  for (int c = 0; c < pred.channels(); ++c) {
    const auto p = pred.channel(c).values();
    const auto z = target.channel(c).values();
    auto g = out.gradient[static_cast<std::size_t>(c)].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double d = p[k] - z[k];
      out.value += d * d;
      g[k] = 2.0 * d;
    }
  }
  return out;
}

void accumulate(std::vector<HeatmapGradient>& into, const HeatmapGradient& g,
                std::size_t view, double weight) {
  for (std::size_t c = 0; c < g.size(); ++c) {
    Grid scaled = g[c];
    scaled *= weight;
    into[view][c] += scaled;
  }
}

bool in_image(const CameraModel& cam, const Vec2& x) {
  return x.x() >= 0.0 && x.y() >= 0.0 && x.x() < cam.image_width() &&
         x.y() < cam.image_height();
}

// Projection into `cam`, or nullopt when behind it or outside the image.
std::optional<Vec2> visible_projection(const CameraModel& cam, const Vec3& X) {
  if (!(cam.depth(X) > 1e-9)) return std::nullopt;
  const Vec2 x = project(cam, X);
  if (!in_image(cam, x)) return std::nullopt;
  return x;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void SceneSnapshot::validate(const Rig& rig) const {
  if (views.empty()) throw Error(Errc::kInvalidArgument, "snapshot has no views");
  const Heatmap& ref = views.front().prediction;
  for (const ViewSnapshot& v : views) {
    camera_by_id(rig, v.camera_id);
    v.crop.validate();
    const auto check = [&](const Heatmap& h, const char* what) {
      if (!h.same_shape(ref)) {
        throw Error(Errc::kShapeMismatch,
                    std::string(what) + " of view '" + v.camera_id + "' differs in shape");
      }
    };
    check(v.prediction, "prediction");
    if (v.label) check(*v.label, "label");
    if (v.pseudo_label) check(*v.pseudo_label, "pseudo label");
  }
}

std::vector<Heatmap> SceneSnapshot::predictions() const {
  std::vector<Heatmap> out;
  out.reserve(views.size());
  for (const ViewSnapshot& v : views) out.push_back(v.prediction);
  return out;
}

void LossWeights::validate() const {
  if (!(lambda_e >= 0.0) || !(lambda_p >= 0.0) || !std::isfinite(lambda_e) ||
      !std::isfinite(lambda_p)) {
    throw Error(Errc::kInvalidArgument, "loss weights must be finite and non-negative");
  }
}

const CameraModel& camera_by_id(const Rig& rig, const std::string& id) {
  for (const CameraModel& cam : rig) {
    if (cam.id() == id) return cam;
  }
  throw Error(Errc::kInvalidArgument, "rig has no camera '" + id + "'");
}

Rig view_cameras(const Rig& rig, const SceneSnapshot& snapshot) {
  Rig out;
  out.reserve(snapshot.views.size());
  for (const ViewSnapshot& v : snapshot.views) out.push_back(camera_by_id(rig, v.camera_id));
  return out;
}

SquaredLoss labeled_loss(const Heatmap& pred, const Heatmap& z) {
  return squared_loss(pred, z);
}

SquaredLoss bootstrap_loss(const Heatmap& pred, const Heatmap& z_hat) {
  return squared_loss(pred, z_hat);
}

TotalLoss total_loss(const SceneSnapshot& snapshot, std::span<const ViewPair> pairs,
                     const LossWeights& weights, const DivergenceConfig& cfg) {
  const std::vector<Heatmap> predictions = snapshot.predictions();
  return total_loss(snapshot, predictions, pairs, weights, cfg);
}

TotalLoss total_loss(const SceneSnapshot& snapshot,
                     std::span<const Heatmap> predictions,
                     std::span<const ViewPair> pairs, const LossWeights& weights,
                     const DivergenceConfig& cfg) {
  weights.validate();
  if (predictions.size() != snapshot.views.size()) {
    throw Error(Errc::kLengthMismatch, "one prediction per snapshot view expected");
  }
  TotalLoss out;
  out.gradients.reserve(predictions.size());
  for (const Heatmap& h : predictions) out.gradients.push_back(zero_gradient(h));

  for (std::size_t v = 0; v < snapshot.views.size(); ++v) {
    const ViewSnapshot& view = snapshot.views[v];
    if (view.label) {
      const SquaredLoss l = labeled_loss(predictions[v], *view.label);
      out.labeled = out.labeled.value_or(0.0) + l.value;
      accumulate(out.gradients, l.gradient, v, 1.0);
    }
    if (view.pseudo_label) {
      const SquaredLoss l = bootstrap_loss(predictions[v], *view.pseudo_label);
      out.bootstrap = out.bootstrap.value_or(0.0) + l.value;
      accumulate(out.gradients, l.gradient, v, weights.lambda_p);
    }
  }
  if (!pairs.empty()) {
    SceneLoss scene = scene_loss(predictions, pairs, cfg);
    out.epipolar = scene.total;
    out.pair_records = std::move(scene.records);
    for (std::size_t v = 0; v < scene.gradients.size(); ++v) {
      accumulate(out.gradients, scene.gradients[v], v, weights.lambda_e);
    }
  }
  if (!out.labeled && !out.epipolar && !out.bootstrap) {
    throw Error(Errc::kNoApplicableTerm, "no labels, pseudo labels, or view pairs");
  }
  out.total = out.labeled.value_or(0.0) + weights.lambda_e * out.epipolar.value_or(0.0) +
              weights.lambda_p * out.bootstrap.value_or(0.0);
  return out;
}

PixelRect heatmap_roi(const CropTransform& crop, int width, int height) {
  const Mat3 to_image = crop_to_heatmap_chain(crop).image_from_heatmap();
  const Vec2 lo = apply_homography(to_image, Vec2(0.0, 0.0));
  const Vec2 hi = apply_homography(to_image, Vec2(width - 1.0, height - 1.0));
  return {std::min(lo.x(), hi.x()), std::min(lo.y(), hi.y()),
          std::max(lo.x(), hi.x()), std::max(lo.y(), hi.y())};
}

PairSelection select_pairs(const Rig& rig, const SceneSnapshot& snapshot,
                           double degeneracy_deg, int oversample) {
  snapshot.validate(rig);
  const Rig cams = view_cameras(rig, snapshot);
  const int W = snapshot.views.front().prediction.width();
  const int H = snapshot.views.front().prediction.height();
  PairSelection sel;
  const int n = static_cast<int>(cams.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& vi = snapshot.views[static_cast<std::size_t>(i)];
      const auto& vj = snapshot.views[static_cast<std::size_t>(j)];
      const auto& ci = cams[static_cast<std::size_t>(i)];
      const auto& cj = cams[static_cast<std::size_t>(j)];
      try {
        const double spread = pair_degeneracy_check(ci, cj, heatmap_roi(vi.crop, W, H));
        if (spread < degeneracy_deg) {
          sel.rejected.push_back({i, j, "epipolar lines within " + std::to_string(spread) + " deg"});
          continue;
        }
        sel.pairs.push_back({i, j, rectified_pair(ci, cj, vi.crop, vj.crop, W, H, oversample)});
      } catch (const Error& e) {
        sel.rejected.push_back({i, j, std::string(to_string(e.code()))});
      }
    }
  }
  return sel;
}

SpatialAugmentation spatial_augment(std::span<const CameraModel> cams,
                                    std::span<const ViewKeypoints> annotations,
                                    int min_views) {
  if (annotations.size() != cams.size()) {
    throw Error(Errc::kLengthMismatch, "one annotation list per camera expected");
  }
  if (min_views < 2) throw Error(Errc::kInvalidArgument, "min_views must be at least 2");
  std::size_t n_channels = 0;
  for (const auto& a : annotations) n_channels = std::max(n_channels, a.size());

  SpatialAugmentation out;
  out.points.assign(n_channels, std::nullopt);
  out.labels.assign(cams.size(), ViewKeypoints(n_channels));
  for (std::size_t c = 0; c < n_channels; ++c) {
    std::vector<CameraModel> seen;
    std::vector<Vec2> pixels;
    for (std::size_t v = 0; v < cams.size(); ++v) {
      if (c < annotations[v].size() && annotations[v][c]) {
        seen.push_back(cams[v]);
        pixels.push_back(*annotations[v][c]);
      }
    }
    if (seen.size() < static_cast<std::size_t>(min_views)) {
      out.skipped.push_back({static_cast<int>(c), Errc::kInsufficientViews});
      continue;
    }
    Vec3 X;
    try {
      X = triangulate_dlt(seen, pixels);
    } catch (const Error& e) {
      out.skipped.push_back({static_cast<int>(c), e.code()});
      continue;
    }
    out.points[c] = X;
    for (std::size_t v = 0; v < cams.size(); ++v) {
      out.labels[v][c] = visible_projection(cams[v], X);
      if (!out.labels[v][c]) ++out.dropped_out_of_bounds;
    }
  }
  return out;
}

TrackAugmentation track_augment(std::span<const CameraModel> cams,
                                std::span<const ViewKeypoints> tracks,
                                double inlier_thresh_px, std::uint64_t seed,
                                int iterations) {
  if (tracks.size() != cams.size()) {
    throw Error(Errc::kLengthMismatch, "one track per camera expected");
  }
  std::size_t n_frames = 0;
  for (const auto& t : tracks) n_frames = std::max(n_frames, t.size());

  TrackAugmentation out;
  for (std::size_t f = 0; f < n_frames; ++f) {
    TrackFrame frame;
    frame.frame = static_cast<int>(f);
    frame.inliers.assign(cams.size(), false);
    frame.labels.assign(cams.size(), std::nullopt);

    std::vector<std::size_t> views;
    std::vector<CameraModel> seen;
    std::vector<Vec2> pixels;
    for (std::size_t v = 0; v < cams.size(); ++v) {
      if (f < tracks[v].size() && tracks[v][f]) {
        views.push_back(v);
        seen.push_back(cams[v]);
        pixels.push_back(*tracks[v][f]);
      }
    }
    if (seen.size() < 2) {
      frame.failure = Errc::kInsufficientViews;
      out.frames.push_back(std::move(frame));
      continue;
    }
    try {
      // Per-frame stream so that frames are independent of each other.
      const RansacTriangulation r = ransac_triangulate(
          seen, pixels, inlier_thresh_px, iterations, seed + 0x9E3779B97F4A7C15ULL * f);
      frame.point = r.point;
      for (std::size_t k = 0; k < views.size(); ++k) frame.inliers[views[k]] = r.inliers[k];
      for (std::size_t v = 0; v < cams.size(); ++v) {
        frame.labels[v] = visible_projection(cams[v], r.point);
        if (!frame.labels[v]) ++out.dropped_out_of_bounds;
      }
    } catch (const Error& e) {
      frame.failure = e.code();
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

ReprojStats heatmap_reprojection(const Rig& rig, const SceneSnapshot& snapshot,
                                 std::span<const Heatmap> heatmaps,
                                 double confidence_floor) {
  if (heatmaps.size() != snapshot.views.size()) {
    throw Error(Errc::kLengthMismatch, "one heatmap per snapshot view expected");
  }
  const Rig cams = view_cameras(rig, snapshot);
  std::vector<std::vector<std::optional<Keypoint>>> detections;
  std::vector<double> scale;
  for (std::size_t v = 0; v < heatmaps.size(); ++v) {
    const CropTransform& crop = snapshot.views[v].crop;
    const Mat3 to_image = crop_to_heatmap_chain(crop).image_from_heatmap();
    std::vector<std::optional<Keypoint>> per_channel;
    for (const Keypoint& k : argmax_keypoints(heatmaps[v])) {
      per_channel.push_back(Keypoint{apply_homography(to_image, k.position), k.confidence});
    }
    detections.push_back(std::move(per_channel));
    scale.push_back(crop.scale() * crop.heatmap_scale());
  }
  return reprojection_error(cams, detections, confidence_floor, scale);
}

OptimizationResult optimize_heatmaps(const Rig& rig, const SceneSnapshot& snapshot,
                                     std::span<const ViewPair> pairs,
                                     const LossWeights& weights,
                                     const DivergenceConfig& cfg,
                                     const OptimizerOptions& options) {
  if (!(options.step_size > 0.0)) throw Error(Errc::kInvalidArgument, "step size must be positive");
  if (options.steps < 0) throw Error(Errc::kInvalidArgument, "steps must be non-negative");
  if (!(options.logit_floor > 0.0 && options.logit_floor < 0.5)) {
    throw Error(Errc::kInvalidArgument, "logit floor must lie in (0, 0.5)");
  }
  snapshot.validate(rig);

  // Unconstrained parameters, one grid per view and channel.
  std::vector<std::vector<Grid>> logits;
  for (const ViewSnapshot& v : snapshot.views) {
    std::vector<Grid> per_channel;
    for (int c = 0; c < v.prediction.channels(); ++c) {
      Grid g = v.prediction.channel(c);
      for (double& x : g.values()) {
        const double p = std::clamp(x, options.logit_floor, 1.0 - options.logit_floor);
        x = std::log(p / (1.0 - p));
      }
      per_channel.push_back(std::move(g));
    }
    logits.push_back(std::move(per_channel));
  }
  const auto heatmaps_from_logits = [&] {
    std::vector<Heatmap> out;
    out.reserve(logits.size());
    for (const auto& per_channel : logits) {
      std::vector<Grid> channels = per_channel;
      for (Grid& g : channels) {
        for (double& x : g.values()) x = logistic(x);
      }
      out.emplace_back(std::move(channels));
    }
    return out;
  };

  OptimizationResult result;
  std::vector<Heatmap> current = heatmaps_from_logits();
  for (int step = 0;; ++step) {
    const TotalLoss loss = total_loss(snapshot, current, pairs, weights, cfg);
    if (!std::isfinite(loss.total)) {
      throw Error(Errc::kNonFiniteLoss, "loss is not finite at step " + std::to_string(step));
    }
    const ReprojStats reproj = heatmap_reprojection(rig, snapshot, current);
    result.trajectory.push_back(
        {step, loss.total, loss.labeled, loss.epipolar, loss.bootstrap, reproj.mean});
    if (step == options.steps) break;

    for (std::size_t v = 0; v < logits.size(); ++v) {
      for (std::size_t c = 0; c < logits[v].size(); ++c) {
        auto theta = logits[v][c].values();
        const auto p = current[v].channel(static_cast<int>(c)).values();
        const auto g = loss.gradients[v][c].values();
        for (std::size_t k = 0; k < theta.size(); ++k) {
          theta[k] -= options.step_size * g[k] * p[k] * (1.0 - p[k]);
        }
      }
    }
    current = heatmaps_from_logits();
  }
  result.heatmaps = std::move(current);
  return result;
}

void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryRow> rows) {
  const auto opt = [&](const std::optional<double>& x) {
    if (x) os << *x;
  };
  const auto old = os.precision(17);
  os << "step,total,L_L,L_E,L_B,mean_reproj_px\n";
  for (const TrajectoryRow& r : rows) {
    os << r.step << ',' << r.total << ',';
    opt(r.labeled);
    os << ',';
    opt(r.epipolar);
    os << ',';
    opt(r.bootstrap);
    os << ',' << r.mean_reproj_px << '\n';
  }
  os.precision(old);
}

}  // namespace epidiv
