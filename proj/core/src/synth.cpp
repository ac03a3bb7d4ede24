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

#include "epidiv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "epidiv/error.hpp"

namespace epidiv {
namespace {

Mat3 look_at(const Vec3& center, const Vec3& target) {
  const Vec3 z = (target - center).normalized();
  Vec3 up(0.0, 0.0, 1.0);
  if (std::abs(z.dot(up)) > 0.999) up = Vec3(0.0, 1.0, 0.0);
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  return R;
}

// Heatmap-space covariance of an isotropic world Gaussian at X, to first order.
Eigen::Matrix2d projected_covariance(const CameraModel& cam, const Vec3& X,
                                     double cell_scale, double world_sigma) {
  const Vec3 x = cam.intrinsics() * cam.rotation() * (X - cam.center());
  Eigen::Matrix<double, 2, 3> d;
  d << 1.0, 0.0, -x.x() / x.z(),
       0.0, 1.0, -x.y() / x.z();
  const Eigen::Matrix<double, 2, 3> J = (cell_scale / x.z()) * d * cam.intrinsics() * cam.rotation();
  return world_sigma * world_sigma * J * J.transpose();
}

}  // namespace

void RigSpec::validate() const {
  if (count < 2) throw Error(Errc::kInvalidArgument, "rig needs at least two cameras");
  if (!(radius > 0.0)) throw Error(Errc::kInvalidArgument, "rig radius must be positive");
  if (!(height_jitter >= 0.0)) throw Error(Errc::kInvalidArgument, "height jitter must be >= 0");
  if (!(focal_min > 0.0) || focal_max < focal_min) {
    throw Error(Errc::kInvalidArgument, "focal range must be positive and ordered");
  }
  if (image_width < 2 || image_height < 2) {
    throw Error(Errc::kInvalidArgument, "image size must be at least 2x2");
  }
}

Rig make_rig(const RigSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Rig rig;
  rig.reserve(static_cast<std::size_t>(spec.count));
  for (int k = 0; k < spec.count; ++k) {
    Vec3 offset;
    if (spec.placement == Placement::kRing) {
      const double theta = 2.0 * std::numbers::pi * k / spec.count;
      const double h = spec.height_jitter * (2.0 * unit(rng) - 1.0);
      offset = Vec3(spec.radius * std::cos(theta), spec.radius * std::sin(theta), h);
    } else {
      // Azimuth spread evenly with jitter, elevation in [-30, 60] degrees.
      const double theta =
          2.0 * std::numbers::pi * (k + 0.8 * (unit(rng) - 0.5)) / spec.count;
      const double elevation = (-30.0 + 90.0 * unit(rng)) * std::numbers::pi / 180.0;
      offset = spec.radius * Vec3(std::cos(elevation) * std::cos(theta),
                                  std::cos(elevation) * std::sin(theta),
                                  std::sin(elevation));
    }
    const double f = spec.focal_min + (spec.focal_max - spec.focal_min) * unit(rng);
    Mat3 K;
    K << f, 0.0, 0.5 * spec.image_width,
         0.0, f, 0.5 * spec.image_height,
         0.0, 0.0, 1.0;
    const Vec3 C = spec.target + offset;
    rig.emplace_back("cam" + std::to_string(k), K, look_at(C, spec.target), C,
                     spec.image_width, spec.image_height);
  }
  return rig;
}

void NoiseSpec::validate() const {
  if (!(peak_jitter >= 0.0)) throw Error(Errc::kInvalidArgument, "peak jitter must be >= 0");
  if (!(swap_probability >= 0.0 && swap_probability <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "swap probability must lie in [0, 1]");
  }
  if (clutter_blobs < 0 || !(clutter_amplitude >= 0.0 && clutter_amplitude <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "clutter count and amplitude out of range");
  }
}

SyntheticScene make_scene(const Rig& rig, std::span<const Vec3> keypoints,
                          double sigma, const NoiseSpec& noise, std::uint64_t seed,
                          const SceneOptions& options) {
  noise.validate();
  if (keypoints.empty()) throw Error(Errc::kInvalidArgument, "scene needs at least one keypoint");
  if (!(sigma > 0.0)) throw Error(Errc::kInvalidArgument, "sigma must be positive");
  const int n_channels = static_cast<int>(keypoints.size());
  for (const auto& [a, b] : noise.symmetric_pairs) {
    if (a < 0 || b < 0 || a >= n_channels || b >= n_channels || a == b) {
      throw Error(Errc::kInvalidArgument, "symmetric pair references an invalid channel");
    }
  }
  for (const PeakOffset& o : noise.offsets) {
    if (o.view < 0 || o.view >= static_cast<int>(rig.size()) || o.channel < 0 ||
        o.channel >= n_channels || !o.delta.allFinite()) {
      throw Error(Errc::kInvalidArgument, "peak offset references an invalid view or channel");
    }
  }

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& X : keypoints) centroid += X;
  centroid /= static_cast<double>(keypoints.size());
  double extent = options.box_half_extent;
  if (!(extent > 0.0)) {
    double spread = 0.0;
    for (const Vec3& X : keypoints) spread = std::max(spread, (X - centroid).norm());
    extent = 1.5 * spread + 0.25;
  }

  // One heatmap cell spans 2 * extent / height world units at the centroid.
  const double world_sigma = sigma * 2.0 * extent / options.height;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticScene scene;
  scene.points.assign(keypoints.begin(), keypoints.end());
  scene.snapshot.frame = 0;
  const double aspect = static_cast<double>(options.width) / options.height;

  for (int view_index = 0; view_index < static_cast<int>(rig.size()); ++view_index) {
    const CameraModel& cam = rig[static_cast<std::size_t>(view_index)];
    const Vec2 c = project(cam, centroid);
    const double h_b = cam.fy() * 2.0 * extent / cam.depth(centroid);
    CropTransform crop;
    crop.u_x = c.x() - 0.5 * h_b * aspect;
    crop.u_y = c.y() - 0.5 * h_b;
    crop.h_b = h_b;
    crop.h_c = options.crop_height;
    crop.h_h = options.height;
    const Mat3 to_heatmap = crop_to_heatmap_chain(crop).heatmap_from_image();

    std::vector<Vec2> truth_img, truth_hm;
    ViewKeypoints annotations;
    for (const Vec3& X : keypoints) {
      const Vec2 x = project(cam, X);
      truth_img.push_back(x);
      truth_hm.push_back(apply_homography(to_heatmap, x));
      annotations.emplace_back(x);
    }

    std::vector<Vec2> peaks = truth_hm;
    if (noise.peak_jitter > 0.0) {
      for (Vec2& p : peaks) {
        p.x() += noise.peak_jitter * gauss(rng);
        p.y() += noise.peak_jitter * gauss(rng);
      }
    }
    for (const auto& [a, b] : noise.symmetric_pairs) {
      if (unit(rng) < noise.swap_probability) {
        std::swap(peaks[static_cast<std::size_t>(a)], peaks[static_cast<std::size_t>(b)]);
      }
    }
    for (const PeakOffset& o : noise.offsets) {
      if (o.view == view_index) peaks[static_cast<std::size_t>(o.channel)] += o.delta;
    }

    const double cell_scale = crop.heatmap_scale() * crop.scale();
    std::vector<Grid> channels;
    for (int ch = 0; ch < n_channels; ++ch) {
      const auto k = static_cast<std::size_t>(ch);
      Grid g = options.projected_profile
                   ? gaussian_channel(peaks[k],
                                      projected_covariance(cam, keypoints[k],
                                                           cell_scale, world_sigma),
                                      options.width, options.height)
                   : gaussian_channel(peaks[k], sigma, options.width, options.height);
      for (int k = 0; k < noise.clutter_blobs; ++k) {
        const Vec2 at(unit(rng) * (options.width - 1), unit(rng) * (options.height - 1));
        const Grid blob = gaussian_channel(at, sigma, options.width, options.height);
        auto dst = g.values();
        const auto src = blob.values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
          dst[i] = std::max(dst[i], noise.clutter_amplitude * src[i]);
        }
      }
      channels.push_back(std::move(g));
    }

    ViewSnapshot view{cam.id(), crop, Heatmap(std::move(channels)), std::nullopt,
                      std::nullopt, std::move(annotations)};
    scene.snapshot.views.push_back(std::move(view));
    scene.truth_image.push_back(std::move(truth_img));
    scene.truth_heatmap.push_back(std::move(truth_hm));
    scene.peaks.push_back(std::move(peaks));
  }
  return scene;
}

}  // namespace epidiv
