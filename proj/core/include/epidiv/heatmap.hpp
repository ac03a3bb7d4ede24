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

// Raster keypoint distributions and the crop / heatmap / rectification
// homography chain used to compare them across views.

#ifndef EPIDIV_HEATMAP_HPP_
#define EPIDIV_HEATMAP_HPP_

#include <optional>
#include <span>
#include <vector>

#include "epidiv/geometry.hpp"

namespace epidiv {

inline constexpr int kHeatmapSize = 46;
inline constexpr double kDefaultLabelSigma = 1.5;

/// Dense single-channel W x H grid of reals, row-major. Cell (u, v) sits at
/// continuous coordinate (u, v). Unlike Heatmap, values are unconstrained so
/// the type doubles as a gradient buffer.
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int u, int v) { return values_[index(u, v)]; }
  double operator()(int u, int v) const { return values_[index(u, v)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const Grid& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  Grid& operator+=(const Grid& other);
  Grid& operator*=(double k);

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// W x H x C keypoint probabilities. Values are clamped to [0, 1] whenever
/// they enter the heatmap.
class Heatmap {
 public:
  Heatmap() = default;
  Heatmap(int width, int height, int channels);
  explicit Heatmap(std::vector<Grid> channels);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return static_cast<int>(channels_.size()); }

  const Grid& channel(int c) const { return channels_.at(static_cast<std::size_t>(c)); }
  void set_channel(int c, Grid values);
  void set(int c, int u, int v, double value);

  bool same_shape(const Heatmap& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels() == other.channels();
  }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Grid> channels_;
};

/// Per-view gradient with respect to heatmap values, one Grid per channel.
using HeatmapGradient = std::vector<Grid>;

HeatmapGradient zero_gradient(const Heatmap& like);

/// Bounding-box crop of an original image, resized to the network input and
/// then to the heatmap resolution.
struct CropTransform {
  double u_x = 0.0;   ///< bounding box left (original pixels)
  double u_y = 0.0;   ///< bounding box top (original pixels)
  double h_b = 1.0;   ///< bounding box height (original pixels)
  double w_x = 0.0;   ///< x offset inside the cropped image
  double w_y = 0.0;   ///< y offset inside the cropped image
  double h_c = 368.0; ///< cropped image height
  double h_h = kHeatmapSize;  ///< heatmap height

  double scale() const { return h_c / h_b; }
  double heatmap_scale() const { return h_h / h_c; }
  void validate() const;

  friend bool operator==(const CropTransform&, const CropTransform&) = default;
};

struct CropChain {
  Mat3 crop_from_image;     ///< ^cH_b
  Mat3 heatmap_from_crop;   ///< ^hH_c
  Mat3 image_from_crop;
  Mat3 crop_from_heatmap;

  Mat3 heatmap_from_image() const { return heatmap_from_crop * crop_from_image; }
  Mat3 image_from_heatmap() const { return image_from_crop * crop_from_heatmap; }
};

Mat3 crop_matrix(double scale, double w_x, double w_y, double u_x, double u_y);
CropChain crop_to_heatmap_chain(const CropTransform& t);

Vec2 apply_homography(const Mat3& H, const Vec2& x);

/// Rectification of a camera pair down to heatmap resolution.
///
/// `chain_*` maps heatmap pixels of a view to its rectified heatmap. Rectified
/// crops reuse the scale and heatmap resolution of the original crop (times
/// `oversample`) with zero offset, and their box starts at the first rectified
/// point of the view's zero-padded heatmap support. Rows then correspond as
/// v_i = a * v_j + b.
struct RectifiedPairGeometry {
  Mat3 rotation;     ///< shared rectified rotation R_n
  Mat3 rectify_i;    ///< H_r of view i (original image -> rectified image)
  Mat3 rectify_j;
  Mat3 chain_i;      ///< heatmap i -> rectified heatmap i
  Mat3 chain_j;
  Mat3 fundamental;  ///< between rectified images, x_j^T F x_i = 0
  double a = 1.0;
  double b = 0.0;
  Vec2 rect_offset_i = Vec2::Zero();  ///< rectified box top-left, view i
  Vec2 rect_offset_j = Vec2::Zero();
  int width = kHeatmapSize;   ///< rectified grid width, >= heatmap width
  int height = kHeatmapSize;  ///< rectified grid height, >= heatmap height
  int oversample = 1;  ///< rectified samples per heatmap cell along each axis
};

/// K_j^{-T} [e_x]_x K_i^{-1} written out entry by entry.
Mat3 rectified_fundamental(const Mat3& K_i, const Mat3& K_j);

/// `width` x `height` is the heatmap size of both views. Each rectified grid
/// grows to hold its view's whole warped (zero-padded) heatmap support.
/// `oversample` multiplies the rectified heatmap scale s_h of both views:
/// a is unchanged and b scales with it.
RectifiedPairGeometry rectified_pair(const CameraModel& cam_i,
                                     const CameraModel& cam_j,
                                     const CropTransform& crop_i,
                                     const CropTransform& crop_j,
                                     int width = kHeatmapSize,
                                     int height = kHeatmapSize,
                                     int oversample = 1);

/// Fundamental matrix between the heatmap grids of two views.
Mat3 heatmap_fundamental(const CameraModel& cam_i, const CameraModel& cam_j,
                         const CropTransform& crop_i,
                         const CropTransform& crop_j);

/// exp(-|x - x_c|^2 / (2 sigma^2)), peak 1; all zeros when absent.
Grid gaussian_channel(const std::optional<Vec2>& keypoint, double sigma,
                      int width, int height);
/// Anisotropic variant: exp(-d^T cov^{-1} d / 2) around `center`.
Grid gaussian_channel(const Vec2& center, const Eigen::Matrix2d& covariance,
                      int width, int height);
Heatmap gaussian_label(std::span<const std::optional<Vec2>> keypoints,
                       double sigma, int width = kHeatmapSize,
                       int height = kHeatmapSize);

/// Bilinear sample; neighbours outside the grid read as zero.
double bilinear_sample(const Grid& grid, double x, double y);

/// Inverse warp: output(x) = input(H^{-1} x), bilinear, clamped to [0, 1].
Grid warp(const Grid& input, const Mat3& H, int out_width, int out_height);

/// Transpose of `warp`: scatters output-space gradients onto input cells.
Grid warp_backward(const Grid& grad_output, const Mat3& H, int in_width,
                   int in_height);

using FlatDistribution = std::vector<double>;

struct RowMax {
  FlatDistribution values;
  std::vector<int> argmax;  ///< column of the maximum per row, smallest on ties
};

RowMax row_max(const Grid& grid);

/// Same result as row_max(warp(input, H, out_width, out_height)), but only
/// visits the cells of each row covered by the warped input support.
RowMax warped_row_max(const Grid& input, const Mat3& H, int out_width, int out_height);

/// Same result as warp_backward of a grid holding grad_rows[v] at
/// (argmax[v], v) and zero elsewhere.
Grid warped_row_max_backward(std::span<const double> grad_rows,
                             std::span<const int> argmax, const Mat3& H,
                             int in_width, int in_height);

/// output[v] = q(a * v + b), linear interpolation, zero outside [0, len - 1].
FlatDistribution resample_flat(std::span<const double> q, double a, double b,
                               int out_height);

/// Transpose of `resample_flat` with respect to q.
std::vector<double> resample_flat_backward(std::span<const double> grad_output,
                                           double a, double b, int in_height);

/// Maximum of bilinear samples of `P_j` along the line F x_i, clipped to the
/// grid domain. Zero if the line misses the domain or is degenerate.
double transfer_at(const Grid& P_j, const Mat3& F, const Vec2& x_i,
                   int samples_per_line);

/// Dense epipolar transfer of `P_j` onto an out_width x out_height grid of the
/// other view; F maps heatmap pixels of that view to lines in P_j.
Grid direct_transfer_oracle(const Grid& P_j, const Mat3& F, int out_width,
                            int out_height, int samples_per_line);

}  // namespace epidiv

#endif  // EPIDIV_HEATMAP_HPP_
