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

// Pinhole camera algebra: projection, two-view epipolar geometry,
// rectifying rotations, and linear / robust triangulation.
//
// Conventions: world-to-camera rotation R, optical center C, so a world point
// X projects to K R (X - C). Pixel coordinates (u, v) have their origin at the
// top-left pixel center. Fundamental matrices satisfy x_j^T F x_i = 0.

#ifndef EPIDIV_GEOMETRY_HPP_
#define EPIDIV_GEOMETRY_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace epidiv {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

class CameraModel {
 public:
  /// Validates the model: K upper-triangular with zero skew and positive
  /// focal lengths, R orthonormal with det +1 (max-abs tolerance 1e-9).
  /// `image_width`/`image_height` of zero mean "unknown"; the image extent is
  /// then taken as twice the principal point.
  CameraModel(std::string id, const Mat3& intrinsics, const Mat3& rotation,
              const Vec3& center, int image_width = 0, int image_height = 0);

  const std::string& id() const { return id_; }
  const Mat3& intrinsics() const { return intrinsics_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& center() const { return center_; }

  double fx() const { return intrinsics_(0, 0); }
  double fy() const { return intrinsics_(1, 1); }
  double px() const { return intrinsics_(0, 2); }
  double py() const { return intrinsics_(1, 2); }

  int image_width() const;
  int image_height() const;
  bool has_explicit_image_size() const { return image_width_ > 0; }

  /// World direction of the optical (z) axis.
  Vec3 optical_axis() const { return rotation_.row(2).transpose(); }
  Mat34 projection_matrix() const;
  /// Depth of X along the optical axis.
  double depth(const Vec3& X) const;

 private:
  std::string id_;
  Mat3 intrinsics_;
  Mat3 rotation_;
  Vec3 center_;
  int image_width_ = 0;
  int image_height_ = 0;
};

using Rig = std::vector<CameraModel>;

/// Homogeneous image line a*u + b*v + c = 0, stored with (a, b) unit length.
class Line2 {
 public:
  /// Throws DegenerateLine when (a, b) is (numerically) zero.
  static Line2 from_homogeneous(const Vec3& coefficients);

  const Vec3& coefficients() const { return coefficients_; }
  double a() const { return coefficients_[0]; }
  double b() const { return coefficients_[1]; }
  double c() const { return coefficients_[2]; }
  /// Unit direction along the line.
  Vec2 direction() const { return {-b(), a()}; }

 private:
  explicit Line2(const Vec3& c) : coefficients_(c) {}
  Vec3 coefficients_;
};

struct PixelRect {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;
};

Mat3 skew(const Vec3& v);

Vec2 project(const CameraModel& cam, const Vec3& X);

/// F with x_j^T F x_i = 0, scaled to unit Frobenius norm.
Mat3 fundamental_matrix(const CameraModel& cam_i, const CameraModel& cam_j);

/// Line F x_i in the second image.
Line2 epipolar_line(const Mat3& F, const Vec2& x_i);

double point_line_distance(const Line2& line, const Vec2& x);

/// Rotation whose first row is the unit baseline C_j - C_i and whose second
/// row is obtained by Gram-Schmidt from the mean optical axis of the pair.
Mat3 rectifying_rotation(const CameraModel& cam_i, const CameraModel& cam_j);

/// Linear (DLT) triangulation from two or more views.
Vec3 triangulate_dlt(std::span<const CameraModel> cams,
                     std::span<const Vec2> pixels);

struct RansacTriangulation {
  Vec3 point;
  std::vector<bool> inliers;
};

/// Two-view hypotheses scored by reprojection consensus, refined by DLT on the
/// winning inlier set. All C(n,2) pairs are tried when n <= 8, otherwise
/// `iterations` pairs drawn from a generator seeded with `seed`.
RansacTriangulation ransac_triangulate(std::span<const CameraModel> cams,
                                       std::span<const Vec2> pixels,
                                       double inlier_thresh_px, int iterations,
                                       std::uint64_t seed);

/// Reprojection error of X in `cam`; +inf when X is not in front of it.
double reprojection_residual(const CameraModel& cam, const Vec3& X,
                             const Vec2& pixel);

/// Epipole of the second camera in the first image (homogeneous).
Vec3 epipole(const CameraModel& cam_i, const CameraModel& cam_j);

/// Largest pairwise angle (degrees) between epipolar lines crossing `roi` in
/// image i: the wedge of the four corner lines, capped at 90, and 90 when the
/// epipole lies inside `roi`. Near-zero means parallel epipolar lines. Throws
/// DegenerateLine when a corner is the epipole.
double pair_degeneracy_check(const CameraModel& cam_i,
                             const CameraModel& cam_j, const PixelRect& roi);

inline constexpr double kDefaultDegeneracyDeg = 2.0;

}  // namespace epidiv

#endif  // EPIDIV_GEOMETRY_HPP_
