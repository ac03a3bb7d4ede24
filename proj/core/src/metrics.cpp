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

#include "epidiv/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "epidiv/error.hpp"

namespace epidiv {

std::vector<double> default_pck_thresholds() {
  std::vector<double> t(51);
  for (int k = 0; k <= 50; ++k) t[static_cast<std::size_t>(k)] = k / 100.0;
  return t;
}

PckCurve pck_curve(std::span<const Vec2> detections, std::span<const Vec2> truths,
                   double window_width, std::span<const double> thresholds) {
  if (detections.size() != truths.size()) {
    throw Error(Errc::kLengthMismatch, "detections and truths differ in count");
  }
  if (detections.empty()) throw Error(Errc::kEmptySamples, "PCK needs at least one sample");
  if (!(window_width > 0.0)) throw Error(Errc::kInvalidArgument, "window width must be positive");

  PckCurve curve;
  if (thresholds.empty()) {
    curve.thresholds = default_pck_thresholds();
  } else {
    curve.thresholds.assign(thresholds.begin(), thresholds.end());
  }
  std::vector<double> distances;
  distances.reserve(detections.size());
  for (std::size_t k = 0; k < detections.size(); ++k) {
    distances.push_back((detections[k] - truths[k]).norm() / window_width);
  }
  std::sort(distances.begin(), distances.end());
  const double n = static_cast<double>(distances.size());
  for (double t : curve.thresholds) {
    const auto within = std::upper_bound(distances.begin(), distances.end(), t) - distances.begin();
    curve.values.push_back(static_cast<double>(within) / n);
  }
  return curve;
}

std::vector<Keypoint> argmax_keypoints(const Heatmap& h) {
  std::vector<Keypoint> out;
  out.reserve(static_cast<std::size_t>(h.channels()));
  for (int c = 0; c < h.channels(); ++c) {
    const Grid& g = h.channel(c);
    int bu = 0, bv = 0;
    double best = g(0, 0);
    for (int v = 0; v < g.height(); ++v) {
      for (int u = 0; u < g.width(); ++u) {
        if (g(u, v) > best) {
          best = g(u, v);
          bu = u;
          bv = v;
        }
      }
    }
    out.push_back({Vec2(bu, bv), best});
  }
  return out;
}

ReprojStats reprojection_error(
    std::span<const CameraModel> cams,
    const std::vector<std::vector<std::optional<Keypoint>>>& detections,
    double confidence_floor, std::span<const double> pixel_scale) {
  if (detections.size() != cams.size()) {
    throw Error(Errc::kLengthMismatch, "one detection list per camera expected");
  }
  if (!pixel_scale.empty() && pixel_scale.size() != cams.size()) {
    throw Error(Errc::kLengthMismatch, "one pixel scale per camera expected");
  }
  std::size_t n_channels = 0;
  for (const auto& d : detections) n_channels = std::max(n_channels, d.size());

  ReprojStats stats;
  for (std::size_t c = 0; c < n_channels; ++c) {
    std::vector<int> views;
    std::vector<CameraModel> view_cams;
    std::vector<Vec2> pixels;
    for (std::size_t v = 0; v < cams.size(); ++v) {
      if (c >= detections[v].size() || !detections[v][c]) continue;
      const Keypoint& k = *detections[v][c];
      if (k.confidence < confidence_floor) continue;
      views.push_back(static_cast<int>(v));
      view_cams.push_back(cams[v]);
      pixels.push_back(k.position);
    }
    if (views.size() < 2) {
      stats.excluded_channels.push_back(static_cast<int>(c));
      continue;
    }
    Vec3 X;
    try {
      X = triangulate_dlt(view_cams, pixels);
    } catch (const Error&) {
      stats.excluded_channels.push_back(static_cast<int>(c));
      continue;
    }
    for (std::size_t k = 0; k < views.size(); ++k) {
      double r = reprojection_residual(view_cams[k], X, pixels[k]);
      if (!pixel_scale.empty()) r *= pixel_scale[static_cast<std::size_t>(views[k])];
      stats.residuals.push_back({views[k], static_cast<int>(c), r});
    }
  }
  if (!stats.residuals.empty()) {
    double s = 0.0;
    for (const auto& r : stats.residuals) s += r.pixels;
    stats.mean = s / static_cast<double>(stats.residuals.size());
    double ss = 0.0;
    for (const auto& r : stats.residuals) ss += (r.pixels - stats.mean) * (r.pixels - stats.mean);
    stats.std = std::sqrt(ss / static_cast<double>(stats.residuals.size()));
  }
  return stats;
}

}  // namespace epidiv
