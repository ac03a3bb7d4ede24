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

#include "epidiv/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "epidiv/error.hpp"

namespace epidiv {
namespace {

double clamp01(double x) {
  // NaN propagates to 0 rather than poisoning downstream maxima.
  if (!(x > 0.0)) return 0.0;
  return x < 1.0 ? x : 1.0;
}

void check_dims(int width, int height) {
  if (width < 2 || height < 2) {
    throw Error(Errc::kInvalidArgument,
                "grids must be at least 2x2, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

Mat3 checked_inverse(const Mat3& H) {
  const double n = H.norm();
  if (!H.allFinite() || n == 0.0 || std::abs((H / n).determinant()) <= 1e-12) {
    throw Error(Errc::kSingularHomography, "homography is not invertible");
  }
  return H.inverse();
}

struct Stencil {
  int u0 = 0;
  int v0 = 0;
  double fx = 0.0;
  double fy = 0.0;
};

// Returns false when the sample lies entirely outside the zero-padded support.
bool make_stencil(int width, int height, double x, double y, Stencil& s) {
  if (!(x > -1.0 && x < width && y > -1.0 && y < height)) return false;
  const double fu = std::floor(x);
  const double fv = std::floor(y);
  s.u0 = static_cast<int>(fu);
  s.v0 = static_cast<int>(fv);
  s.fx = x - fu;
  s.fy = y - fv;
  return true;
}

bool inside(int width, int height, int u, int v) {
  return u >= 0 && v >= 0 && u < width && v < height;
}

// Dehomogenized H^{-1} applied to an output pixel; false on a vanishing w.
bool source_point(const Mat3& inverse, int u, int v, double& x, double& y) {
  const Vec3 p = inverse * Vec3(u, v, 1.0);
  if (std::abs(p.z()) < 1e-12) return false;
  x = p.x() / p.z();
  y = p.y() / p.z();
  return std::isfinite(x) && std::isfinite(y);
}

}  // namespace

// --- Grid / Heatmap ---------------------------------------------------------

Grid::Grid(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(Errc::kInvalidArgument, "grid dimensions must be positive");
  }
  values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Grid& Grid::operator+=(const Grid& other) {
  if (!same_shape(other)) throw Error(Errc::kShapeMismatch, "grid += with different shapes");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Grid& Grid::operator*=(double k) {
  for (double& x : values_) x *= k;
  return *this;
}

Heatmap::Heatmap(int width, int height, int channels)
    : width_(width), height_(height) {
  check_dims(width, height);
  if (channels < 1) throw Error(Errc::kInvalidArgument, "heatmap needs at least one channel");
  channels_.assign(static_cast<std::size_t>(channels), Grid(width, height));
}

Heatmap::Heatmap(std::vector<Grid> channels) {
  if (channels.empty()) throw Error(Errc::kInvalidArgument, "heatmap needs at least one channel");
  width_ = channels.front().width();
  height_ = channels.front().height();
  check_dims(width_, height_);
  for (Grid& g : channels) {
    if (g.width() != width_ || g.height() != height_) {
      throw Error(Errc::kShapeMismatch, "heatmap channels differ in size");
    }
    for (double& x : g.values()) x = clamp01(x);
  }
  channels_ = std::move(channels);
}

void Heatmap::set_channel(int c, Grid values) {
  if (values.width() != width_ || values.height() != height_) {
    throw Error(Errc::kShapeMismatch, "channel size does not match heatmap");
  }
  for (double& x : values.values()) x = clamp01(x);
  channels_.at(static_cast<std::size_t>(c)) = std::move(values);
}

void Heatmap::set(int c, int u, int v, double value) {
  channels_.at(static_cast<std::size_t>(c))(u, v) = clamp01(value);
}

HeatmapGradient zero_gradient(const Heatmap& like) {
  return HeatmapGradient(static_cast<std::size_t>(like.channels()),
                         Grid(like.width(), like.height()));
}

// --- crop chain -------------------------------------------------------------

void CropTransform::validate() const {
  const double fields[] = {u_x, u_y, h_b, w_x, w_y, h_c, h_h};
  for (double f : fields) {
    if (!std::isfinite(f)) throw Error(Errc::kInvalidArgument, "crop transform has non-finite field");
  }
  if (!(h_b > 0.0) || !(h_c > 0.0) || !(h_h > 0.0)) {
    throw Error(Errc::kInvalidArgument, "crop heights h_b, h_c, h_h must be positive");
  }
}

Mat3 crop_matrix(double scale, double w_x, double w_y, double u_x, double u_y) {
  Mat3 H;
  H << scale, 0.0, w_x - scale * u_x,
       0.0, scale, w_y - scale * u_y,
       0.0, 0.0, 1.0;
  return H;
}

CropChain crop_to_heatmap_chain(const CropTransform& t) {
  t.validate();
  const double s = t.scale();
  const double sh = t.heatmap_scale();
  CropChain chain;
  chain.crop_from_image = crop_matrix(s, t.w_x, t.w_y, t.u_x, t.u_y);
  chain.heatmap_from_crop = Vec3(sh, sh, 1.0).asDiagonal();
  // Closed-form inverses of the two affine maps.
  chain.image_from_crop = crop_matrix(1.0 / s, t.u_x, t.u_y, t.w_x, t.w_y);
  chain.crop_from_heatmap = Vec3(1.0 / sh, 1.0 / sh, 1.0).asDiagonal();
  return chain;
}

Vec2 apply_homography(const Mat3& H, const Vec2& x) {
  return (H * x.homogeneous()).hnormalized();
}

// --- rectification ----------------------------------------------------------

Mat3 rectified_fundamental(const Mat3& K_i, const Mat3& K_j) {
  const double fy_i = K_i(1, 1), py_i = K_i(1, 2);
  const double fy_j = K_j(1, 1), py_j = K_j(1, 2);
  Mat3 F;
  F << 0.0, 0.0, 0.0,
       0.0, 0.0, -1.0 / fy_j,
       0.0, 1.0 / fy_i, py_j / fy_j - py_i / fy_i;
  return F;
}

RectifiedPairGeometry rectified_pair(const CameraModel& cam_i,
                                     const CameraModel& cam_j,
                                     const CropTransform& crop_i,
                                     const CropTransform& crop_j, int width,
                                     int height, int oversample) {
  check_dims(width, height);
  if (oversample < 1) throw Error(Errc::kInvalidArgument, "oversample must be >= 1");
  RectifiedPairGeometry g;
  g.oversample = oversample;
  g.width = width;
  g.height = height;
  g.rotation = rectifying_rotation(cam_i, cam_j);

  const auto rectify = [&](const CameraModel& cam) {
    return Mat3(cam.intrinsics() * g.rotation * cam.rotation().transpose() *
                cam.intrinsics().inverse());
  };
  g.rectify_i = rectify(cam_i);
  g.rectify_j = rectify(cam_j);

  // Corners of the zero-padded bilinear support (-1, W) x (-1, H).
  const Vec2 corners_hm[4] = {{-1.0, -1.0},
                              {static_cast<double>(width), -1.0},
                              {-1.0, static_cast<double>(height)},
                              {static_cast<double>(width), static_cast<double>(height)}};

  // Rectified grids are sized to hold the whole warped heatmap support of each
  // view: the rectifying rotation can stretch content far along the rows and
  // tilt it across them, and a flattened profile cut off at the grid edge
  // would disagree with the other view wherever that view still sees the
  // plane. The normalized rectified row t = (y - p_y) / f_y is shared by both
  // views.
  struct Placed {
    Mat3 to_rect_image;
    double left = 0.0;
    double right = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
  };
  const auto place = [&](const CameraModel& cam, const CropTransform& crop,
                         const Mat3& H_r) {
    const CropChain chain = crop_to_heatmap_chain(crop);
    Placed p;
    p.to_rect_image = H_r * chain.image_from_heatmap();
    p.left = p.t_min = std::numeric_limits<double>::infinity();
    p.right = p.t_max = -std::numeric_limits<double>::infinity();
    for (const Vec2& c : corners_hm) {
      const Vec3 q = p.to_rect_image * c.homogeneous();
      if (!(q.z() > 1e-9)) {
        throw Error(Errc::kEpipoleInImage,
                    "rectifying view '" + cam.id() + "' sends its crop through infinity");
      }
      const double t = (q.y() / q.z() - cam.py()) / cam.fy();
      p.left = std::min(p.left, q.x() / q.z());
      p.right = std::max(p.right, q.x() / q.z());
      p.t_min = std::min(p.t_min, t);
      p.t_max = std::max(p.t_max, t);
    }
    return p;
  };
  const Placed placed_i = place(cam_i, crop_i, g.rectify_i);
  const Placed placed_j = place(cam_j, crop_j, g.rectify_j);
  double span_u = 0.0;
  double span_v = 0.0;
  const auto extent = [&](const CameraModel& cam, const CropTransform& crop,
                          const Placed& p, Vec2& offset) {
    const double k = oversample * crop.scale() * crop.heatmap_scale();
    // Column 0 and row 0 at the view's own first support point.
    offset.x() = p.left;
    offset.y() = cam.py() + cam.fy() * p.t_min;
    span_u = std::max(span_u, k * (p.right - p.left));
    span_v = std::max(span_v, k * cam.fy() * (p.t_max - p.t_min));
  };
  extent(cam_i, crop_i, placed_i, g.rect_offset_i);
  extent(cam_j, crop_j, placed_j, g.rect_offset_j);
  if (!(span_u < 64.0 * oversample * width) || !(span_v < 64.0 * oversample * height)) {
    throw Error(Errc::kEpipoleInImage, "rectified crop is too large; epipole near the field of view");
  }
  g.width = std::max(width, static_cast<int>(std::ceil(span_u)) + 1);
  g.height = std::max(height, static_cast<int>(std::ceil(span_v)) + 1);

  const auto finish = [&](const CropTransform& crop, const Placed& p, const Vec2& offset) {
    const Mat3 rect_crop = crop_matrix(crop.scale(), 0.0, 0.0, offset.x(), offset.y());
    const double sh = oversample * crop.heatmap_scale();
    const Mat3 rect_heatmap = Vec3(sh, sh, 1.0).asDiagonal();
    return Mat3(rect_heatmap * rect_crop * p.to_rect_image);
  };
  g.chain_i = finish(crop_i, placed_i, g.rect_offset_i);
  g.chain_j = finish(crop_j, placed_j, g.rect_offset_j);

  g.fundamental = rectified_fundamental(cam_i.intrinsics(), cam_j.intrinsics());

  const double k_i = oversample * crop_i.heatmap_scale() * crop_i.scale();
  const double k_j = oversample * crop_j.heatmap_scale() * crop_j.scale();
  const double fy_ratio = cam_i.fy() / cam_j.fy();
  g.a = k_i * cam_i.fy() / (k_j * cam_j.fy());
  g.b = k_i * ((g.rect_offset_j.y() - cam_j.py()) * fy_ratio + cam_i.py() -
               g.rect_offset_i.y());
  return g;
}

Mat3 heatmap_fundamental(const CameraModel& cam_i, const CameraModel& cam_j,
                         const CropTransform& crop_i,
                         const CropTransform& crop_j) {
  const Mat3 F = fundamental_matrix(cam_i, cam_j);
  const Mat3 Hf = crop_to_heatmap_chain(crop_j).image_from_heatmap().transpose() *
                  F * crop_to_heatmap_chain(crop_i).image_from_heatmap();
  return Hf / Hf.norm();
}

// --- labels -----------------------------------------------------------------

Grid gaussian_channel(const std::optional<Vec2>& keypoint, double sigma,
                      int width, int height) {
  if (!(sigma > 0.0)) throw Error(Errc::kInvalidArgument, "sigma must be positive");
  check_dims(width, height);
  Grid g(width, height);
  if (!keypoint) return g;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double du = u - keypoint->x();
      const double dv = v - keypoint->y();
      g(u, v) = std::exp(-(du * du + dv * dv) * inv);
    }
  }
  return g;
}

Grid gaussian_channel(const Vec2& center, const Eigen::Matrix2d& covariance,
                      int width, int height) {
  check_dims(width, height);
  const double det = covariance.determinant();
  if (!(det > 0.0) || !(covariance(0, 0) > 0.0)) {
    throw Error(Errc::kInvalidArgument, "covariance must be positive definite");
  }
  const Eigen::Matrix2d info = covariance.inverse();
  Grid g(width, height);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const Vec2 d(u - center.x(), v - center.y());
      g(u, v) = std::exp(-0.5 * d.dot(info * d));
    }
  }
  return g;
}

Heatmap gaussian_label(std::span<const std::optional<Vec2>> keypoints,
                       double sigma, int width, int height) {
  std::vector<Grid> channels;
  channels.reserve(keypoints.size());
  for (const auto& k : keypoints) channels.push_back(gaussian_channel(k, sigma, width, height));
  return Heatmap(std::move(channels));
}

// --- warping ----------------------------------------------------------------

double bilinear_sample(const Grid& grid, double x, double y) {
  Stencil s;
  if (!make_stencil(grid.width(), grid.height(), x, y, s)) return 0.0;
  const int w = grid.width();
  const int h = grid.height();
  const auto at = [&](int u, int v) { return inside(w, h, u, v) ? grid(u, v) : 0.0; };
  return (1.0 - s.fx) * (1.0 - s.fy) * at(s.u0, s.v0) +
         s.fx * (1.0 - s.fy) * at(s.u0 + 1, s.v0) +
         (1.0 - s.fx) * s.fy * at(s.u0, s.v0 + 1) +
         s.fx * s.fy * at(s.u0 + 1, s.v0 + 1);
}

Grid warp(const Grid& input, const Mat3& H, int out_width, int out_height) {
  const Mat3 inverse = checked_inverse(H);
  Grid out(out_width, out_height);
  for (int v = 0; v < out_height; ++v) {
    for (int u = 0; u < out_width; ++u) {
      double x, y;
      if (!source_point(inverse, u, v, x, y)) continue;
      out(u, v) = clamp01(bilinear_sample(input, x, y));
    }
  }
  return out;
}

Grid warp_backward(const Grid& grad_output, const Mat3& H, int in_width,
                   int in_height) {
  const Mat3 inverse = checked_inverse(H);
  Grid grad(in_width, in_height);
  for (int v = 0; v < grad_output.height(); ++v) {
    for (int u = 0; u < grad_output.width(); ++u) {
      const double g = grad_output(u, v);
      if (g == 0.0) continue;
      double x, y;
      if (!source_point(inverse, u, v, x, y)) continue;
      Stencil s;
      if (!make_stencil(in_width, in_height, x, y, s)) continue;
      const double w[4] = {(1.0 - s.fx) * (1.0 - s.fy), s.fx * (1.0 - s.fy),
                           (1.0 - s.fx) * s.fy, s.fx * s.fy};
      const int du[4] = {0, 1, 0, 1};
      const int dv[4] = {0, 0, 1, 1};
      for (int k = 0; k < 4; ++k) {
        const int cu = s.u0 + du[k];
        const int cv = s.v0 + dv[k];
        if (inside(in_width, in_height, cu, cv)) grad(cu, cv) += g * w[k];
      }
    }
  }
  return grad;
}

// --- flattening -------------------------------------------------------------

RowMax row_max(const Grid& grid) {
  RowMax r;
  r.values.resize(static_cast<std::size_t>(grid.height()));
  r.argmax.resize(static_cast<std::size_t>(grid.height()));
  for (int v = 0; v < grid.height(); ++v) {
    int best_u = 0;
    double best = grid(0, v);
    for (int u = 1; u < grid.width(); ++u) {
      if (grid(u, v) > best) {
        best = grid(u, v);
        best_u = u;
      }
    }
    r.values[static_cast<std::size_t>(v)] = best;
    r.argmax[static_cast<std::size_t>(v)] = best_u;
  }
  return r;
}

namespace {

// Columns [lo, hi] of row v that may be non-zero after warping a
// width x height grid through H; the forward image of the zero-padded support
// is a convex quadrilateral. False when the corners straddle the line at
// infinity, in which case every column has to be visited.
struct RowSpans {
  std::vector<int> lo;
  std::vector<int> hi;
};

bool warped_row_spans(const Mat3& H, int width, int height, int out_width,
                      int out_height, RowSpans& spans) {
  const double xs[4] = {-1.0, double(width), double(width), -1.0};
  const double ys[4] = {-1.0, -1.0, double(height), double(height)};
  Vec2 q[4];
  double sign = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Vec3 p = H * Vec3(xs[k], ys[k], 1.0);
    if (!std::isfinite(p.z()) || std::abs(p.z()) < 1e-9 * H.norm()) return false;
    if (sign == 0.0) sign = p.z() > 0 ? 1.0 : -1.0;
    if (p.z() * sign <= 0.0) return false;
    q[k] = p.head<2>() / p.z();
    if (!q[k].allFinite()) return false;
  }
  constexpr double kMargin = 2.0;
  spans.lo.assign(static_cast<std::size_t>(out_height), 1);
  spans.hi.assign(static_cast<std::size_t>(out_height), 0);
  for (int v = 0; v < out_height; ++v) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int k = 0; k < 4; ++k) {
      const Vec2& a = q[k];
      const Vec2& b = q[(k + 1) % 4];
      const double y0 = std::min(a.y(), b.y()) - kMargin;
      const double y1 = std::max(a.y(), b.y()) + kMargin;
      if (v < y0 || v > y1) continue;
      const double dy = b.y() - a.y();
      if (std::abs(dy) < 1e-12) {
        lo = std::min({lo, a.x(), b.x()});
        hi = std::max({hi, a.x(), b.x()});
        continue;
      }
      const double x = a.x() + std::clamp((v - a.y()) / dy, 0.0, 1.0) * (b.x() - a.x());
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    if (lo > hi) continue;
    const auto k = static_cast<std::size_t>(v);
    spans.lo[k] = std::max(0, static_cast<int>(std::floor(lo - kMargin)));
    spans.hi[k] = std::min(out_width - 1, static_cast<int>(std::ceil(hi + kMargin)));
  }
  return true;
}

}  // namespace

RowMax warped_row_max(const Grid& input, const Mat3& H, int out_width, int out_height) {
  const Mat3 inverse = checked_inverse(H);
  if (out_width <= 0 || out_height <= 0) {
    throw Error(Errc::kInvalidArgument, "grid dimensions must be positive");
  }
  RowSpans spans;
  if (!warped_row_spans(H, input.width(), input.height(), out_width, out_height, spans)) {
    return row_max(warp(input, H, out_width, out_height));
  }
  RowMax r;
  r.values.assign(static_cast<std::size_t>(out_height), 0.0);
  r.argmax.assign(static_cast<std::size_t>(out_height), 0);
  for (int v = 0; v < out_height; ++v) {
    const auto k = static_cast<std::size_t>(v);
    // Cells outside the span are exactly zero and heatmaps are non-negative,
    // so a zero row keeps column 0 as in row_max.
    double best = 0.0;
    int best_u = 0;
    for (int u = spans.lo[k]; u <= spans.hi[k]; ++u) {
      double x, y;
      if (!source_point(inverse, u, v, x, y)) continue;
      const double value = clamp01(bilinear_sample(input, x, y));
      if (value > best) {
        best = value;
        best_u = u;
      }
    }
    r.values[k] = best;
    r.argmax[k] = best_u;
  }
  return r;
}

Grid warped_row_max_backward(std::span<const double> grad_rows,
                             std::span<const int> argmax, const Mat3& H,
                             int in_width, int in_height) {
  if (grad_rows.size() != argmax.size()) {
    throw Error(Errc::kShapeMismatch, "row gradient and argmax lengths differ");
  }
  const Mat3 inverse = checked_inverse(H);
  Grid grad(in_width, in_height);
  for (std::size_t k = 0; k < grad_rows.size(); ++k) {
    const double g = grad_rows[k];
    if (g == 0.0) continue;
    double x, y;
    if (!source_point(inverse, argmax[k], static_cast<int>(k), x, y)) continue;
    Stencil s;
    if (!make_stencil(in_width, in_height, x, y, s)) continue;
    const double w[4] = {(1.0 - s.fx) * (1.0 - s.fy), s.fx * (1.0 - s.fy),
                         (1.0 - s.fx) * s.fy, s.fx * s.fy};
    const int du[4] = {0, 1, 0, 1};
    const int dv[4] = {0, 0, 1, 1};
    for (int n = 0; n < 4; ++n) {
      const int cu = s.u0 + du[n];
      const int cv = s.v0 + dv[n];
      if (inside(in_width, in_height, cu, cv)) grad(cu, cv) += g * w[n];
    }
  }
  return grad;
}

namespace {

// Interpolation stencil of position `pos` in a length-n array: left index and
// right weight. False when pos is outside [0, n - 1].
bool flat_stencil(double pos, std::size_t n, std::size_t& i0, double& t) {
  if (n == 0 || !(pos >= 0.0) || pos > static_cast<double>(n - 1)) return false;
  const double f = std::floor(pos);
  i0 = static_cast<std::size_t>(f);
  t = pos - f;
  if (i0 == n - 1) t = 0.0;
  return true;
}

}  // namespace

FlatDistribution resample_flat(std::span<const double> q, double a, double b,
                               int out_height) {
  if (a == 0.0 || !std::isfinite(a)) throw Error(Errc::kZeroScale, "resample scale a must be nonzero");
  if (out_height < 0) throw Error(Errc::kInvalidArgument, "negative output length");
  FlatDistribution out(static_cast<std::size_t>(out_height), 0.0);
  for (int v = 0; v < out_height; ++v) {
    std::size_t i0;
    double t;
    if (!flat_stencil(a * v + b, q.size(), i0, t)) continue;
    out[static_cast<std::size_t>(v)] =
        t == 0.0 ? q[i0] : (1.0 - t) * q[i0] + t * q[i0 + 1];
  }
  return out;
}

std::vector<double> resample_flat_backward(std::span<const double> grad_output,
                                           double a, double b, int in_height) {
  if (a == 0.0 || !std::isfinite(a)) throw Error(Errc::kZeroScale, "resample scale a must be nonzero");
  std::vector<double> grad(static_cast<std::size_t>(in_height), 0.0);
  for (std::size_t v = 0; v < grad_output.size(); ++v) {
    std::size_t i0;
    double t;
    if (!flat_stencil(a * static_cast<double>(v) + b, grad.size(), i0, t)) continue;
    grad[i0] += (1.0 - t) * grad_output[v];
    if (t != 0.0) grad[i0 + 1] += t * grad_output[v];
  }
  return grad;
}

// --- direct transfer ---------------------------------------------------------

double transfer_at(const Grid& P_j, const Mat3& F, const Vec2& x_i,
                   int samples_per_line) {
  const Vec3 l = F * x_i.homogeneous();
  const double n = l.head<2>().norm();
  if (!(n > 1e-12 * std::max(1.0, std::abs(l.z())))) return 0.0;
  const Vec3 line = l / n;
  // Parametrize p(t) = p0 + t d and clip to the zero-padded support.
  const Vec2 d(-line.y(), line.x());
  const Vec2 p0 = -line.z() * line.head<2>();
  const double lo[2] = {-1.0, -1.0};
  const double hi[2] = {static_cast<double>(P_j.width()), static_cast<double>(P_j.height())};
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (p0[k] < lo[k] || p0[k] > hi[k]) return 0.0;
      continue;
    }
    double t0 = (lo[k] - p0[k]) / d[k];
    double t1 = (hi[k] - p0[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
  }
  if (!(t_max >= t_min)) return 0.0;
  const int n_samples = std::max(samples_per_line, 2);
  double best = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const double t = t_min + (t_max - t_min) * k / (n_samples - 1);
    const Vec2 p = p0 + t * d;
    best = std::max(best, bilinear_sample(P_j, p.x(), p.y()));
  }
  return clamp01(best);
}

Grid direct_transfer_oracle(const Grid& P_j, const Mat3& F, int out_width,
                            int out_height, int samples_per_line) {
  if (samples_per_line < 4 * std::max(P_j.width(), P_j.height())) {
    throw Error(Errc::kInvalidArgument, "samples_per_line must be >= 4 * max(W, H)");
  }
  Grid out(out_width, out_height);
  for (int v = 0; v < out_height; ++v) {
    for (int u = 0; u < out_width; ++u) {
      out(u, v) = transfer_at(P_j, F, Vec2(u, v), samples_per_line);
    }
  }
  return out;
}

}  // namespace epidiv
