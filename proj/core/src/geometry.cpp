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

#include "epidiv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <utility>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "epidiv/error.hpp"

namespace epidiv {
namespace {

constexpr double kOrthonormalTol = 1e-9;
constexpr double kMinDepth = 1e-9;
constexpr double kMinBaseline = 1e-9;

void check_finite(const Vec2& x, const char* what) {
  if (!x.allFinite()) throw Error(Errc::kInvalidArgument, what);
}

// Homogeneous DLT on a stack of projection matrices.
Vec3 triangulate_projections(std::span<const Mat34> projections,
                             std::span<const Vec2> pixels) {
  const auto n = projections.size();
  Eigen::MatrixXd A(2 * n, 4);
  for (std::size_t k = 0; k < n; ++k) {
    const Mat34& P = projections[k];
    Eigen::RowVector4d r0 = pixels[k].x() * P.row(2) - P.row(0);
    Eigen::RowVector4d r1 = pixels[k].y() * P.row(2) - P.row(1);
    // Row scaling keeps views with large focal lengths from dominating.
    A.row(2 * k) = r0 / std::max(r0.norm(), 1e-300);
    A.row(2 * k + 1) = r1 / std::max(r1.norm(), 1e-300);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d sv = [&] {
    Eigen::Vector4d s = Eigen::Vector4d::Zero();
    const auto& values = svd.singularValues();
    for (Eigen::Index k = 0; k < values.size(); ++k) s[k] = values[k];
    return s;
  }();
  if (sv[0] <= 0.0 || (sv[2] - sv[3]) < 1e-12 * sv[0]) {
    throw Error(Errc::kIllConditioned,
                "smallest singular values are not separated");
  }
  const Eigen::Vector4d Xh = svd.matrixV().col(3);
  if (std::abs(Xh[3]) < 1e-12 * Xh.norm()) {
    throw Error(Errc::kIllConditioned, "triangulated point at infinity");
  }
  return Xh.head<3>() / Xh[3];
}

// Reprojection distance without the cheirality test.
double projective_residual(const Mat34& P, const Vec3& X, const Vec2& pixel) {
  const Vec3 x = P * X.homogeneous();
  if (std::abs(x.z()) < kMinDepth) return std::numeric_limits<double>::infinity();
  return (x.hnormalized() - pixel).norm();
}

}  // namespace

CameraModel::CameraModel(std::string id, const Mat3& intrinsics,
                         const Mat3& rotation, const Vec3& center,
                         int image_width, int image_height)
    : id_(std::move(id)),
      intrinsics_(intrinsics),
      rotation_(rotation),
      center_(center),
      image_width_(image_width),
      image_height_(image_height) {
  if (!intrinsics.allFinite() || !rotation.allFinite() || !center.allFinite()) {
    throw Error(Errc::kInvalidArgument, "camera '" + id_ + "' has non-finite entries");
  }
  if (!(fx() > 0.0) || !(fy() > 0.0)) {
    throw Error(Errc::kInvalidArgument, "camera '" + id_ + "' needs positive focal lengths");
  }
  if (intrinsics(0, 1) != 0.0 || intrinsics(1, 0) != 0.0 ||
      intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0 ||
      intrinsics(2, 2) != 1.0) {
    throw Error(Errc::kInvalidArgument,
                "camera '" + id_ + "' intrinsics must be [[fx,0,px],[0,fy,py],[0,0,1]]");
  }
  const double ortho =
      (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kOrthonormalTol || std::abs(rotation.determinant() - 1.0) > kOrthonormalTol) {
    throw Error(Errc::kInvalidArgument, "camera '" + id_ + "' rotation is not in SO(3)");
  }
  if (image_width < 0 || image_height < 0) {
    throw Error(Errc::kInvalidArgument, "camera '" + id_ + "' has negative image size");
  }
}

int CameraModel::image_width() const {
  return image_width_ > 0 ? image_width_ : static_cast<int>(std::lround(2.0 * px()));
}

int CameraModel::image_height() const {
  return image_height_ > 0 ? image_height_ : static_cast<int>(std::lround(2.0 * py()));
}

Mat34 CameraModel::projection_matrix() const {
  Mat34 Rt;
  Rt.leftCols<3>() = rotation_;
  Rt.col(3) = -rotation_ * center_;
  return intrinsics_ * Rt;
}

double CameraModel::depth(const Vec3& X) const {
  return rotation_.row(2).dot(X - center_);
}

Line2 Line2::from_homogeneous(const Vec3& coefficients) {
  const double n = coefficients.head<2>().norm();
  if (!std::isfinite(n) || n <= 1e-12 * std::max(1.0, std::abs(coefficients[2]))) {
    throw Error(Errc::kDegenerateLine, "line has no finite direction");
  }
  return Line2(coefficients / n);
}

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return S;
}

Vec2 project(const CameraModel& cam, const Vec3& X) {
  const Vec3 Xc = cam.rotation() * (X - cam.center());
  if (!(Xc.z() > kMinDepth)) {
    throw Error(Errc::kDepthNonPositive, "point is not in front of camera '" + cam.id() + "'");
  }
  return (cam.intrinsics() * Xc).hnormalized();
}

Mat3 fundamental_matrix(const CameraModel& cam_i, const CameraModel& cam_j) {
  const Vec3 baseline = cam_j.center() - cam_i.center();
  if (baseline.norm() <= kMinBaseline) {
    throw Error(Errc::kCoincidentCenters, cam_i.id() + " / " + cam_j.id());
  }
  const Mat3 F = cam_j.intrinsics().inverse().transpose() * cam_j.rotation() *
                 skew(baseline) * cam_i.rotation().transpose() *
                 cam_i.intrinsics().inverse();
  return F / F.norm();
}

Line2 epipolar_line(const Mat3& F, const Vec2& x_i) {
  check_finite(x_i, "epipolar_line: non-finite point");
  return Line2::from_homogeneous(F * x_i.homogeneous());
}

double point_line_distance(const Line2& line, const Vec2& x) {
  return std::abs(line.a() * x.x() + line.b() * x.y() + line.c());
}

Mat3 rectifying_rotation(const CameraModel& cam_i, const CameraModel& cam_j) {
  const Vec3 baseline = cam_j.center() - cam_i.center();
  if (baseline.norm() <= kMinBaseline) {
    throw Error(Errc::kCoincidentCenters, cam_i.id() + " / " + cam_j.id());
  }
  const Vec3 r_x = baseline.normalized();
  const Vec3 seed = 0.5 * (cam_i.optical_axis() + cam_j.optical_axis());
  // Gram-Schmidt: remove the baseline component from the seed axis.
  Vec3 r_z = seed - seed.dot(r_x) * r_x;
  if (seed.norm() < 1e-6 || r_z.norm() < 1e-6 * seed.norm()) {
    throw Error(Errc::kGazeParallelToBaseline, cam_i.id() + " / " + cam_j.id());
  }
  r_z.normalize();
  const Vec3 r_y = r_z.cross(r_x);
  Mat3 Rn;
  Rn.row(0) = r_x.transpose();
  Rn.row(1) = r_y.transpose();
  Rn.row(2) = r_z.transpose();
  return Rn;
}

Vec3 triangulate_dlt(std::span<const CameraModel> cams,
                     std::span<const Vec2> pixels) {
  if (cams.size() != pixels.size()) {
    throw Error(Errc::kLengthMismatch, "triangulate_dlt: cameras and pixels differ in count");
  }
  if (cams.size() < 2) {
    throw Error(Errc::kInsufficientViews, "triangulation needs at least two views");
  }
  std::vector<Mat34> projections;
  projections.reserve(cams.size());
  for (std::size_t k = 0; k < cams.size(); ++k) {
    check_finite(pixels[k], "triangulate_dlt: non-finite pixel");
    projections.push_back(cams[k].projection_matrix());
  }
  return triangulate_projections(projections, pixels);
}

double reprojection_residual(const CameraModel& cam, const Vec3& X,
                             const Vec2& pixel) {
  if (!(cam.depth(X) > kMinDepth)) return std::numeric_limits<double>::infinity();
  return (project(cam, X) - pixel).norm();
}

RansacTriangulation ransac_triangulate(std::span<const CameraModel> cams,
                                       std::span<const Vec2> pixels,
                                       double inlier_thresh_px, int iterations,
                                       std::uint64_t seed) {
  if (cams.size() != pixels.size()) {
    throw Error(Errc::kLengthMismatch, "ransac_triangulate: cameras and pixels differ in count");
  }
  const std::size_t n = cams.size();
  if (n < 2) throw Error(Errc::kInsufficientViews, "RANSAC needs at least two views");
  if (!(inlier_thresh_px > 0.0)) {
    throw Error(Errc::kInvalidArgument, "inlier threshold must be positive");
  }

  std::vector<Mat34> projections;
  projections.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    check_finite(pixels[k], "ransac_triangulate: non-finite pixel");
    projections.push_back(cams[k].projection_matrix());
  }

  std::vector<std::pair<std::size_t, std::size_t>> hypotheses;
  if (n <= 8) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) hypotheses.emplace_back(a, b);
  } else {
    if (iterations < 1) throw Error(Errc::kInvalidArgument, "iterations must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_int_distribution<std::size_t> second(0, n - 2);
    for (int it = 0; it < iterations; ++it) {
      const std::size_t a = first(rng);
      std::size_t b = second(rng);
      if (b >= a) ++b;
      hypotheses.emplace_back(std::min(a, b), std::max(a, b));
    }
  }

  std::size_t best_count = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<bool> best_mask(n, false);

  for (const auto& [a, b] : hypotheses) {
    const Mat34 pair_p[2] = {projections[a], projections[b]};
    const Vec2 pair_x[2] = {pixels[a], pixels[b]};
    Vec3 X;
    try {
      X = triangulate_projections(pair_p, pair_x);
    } catch (const Error&) {
      continue;
    }
    std::vector<bool> mask(n, false);
    std::size_t count = 0;
    double cost = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = projective_residual(projections[k], X, pixels[k]);
      if (r < inlier_thresh_px) {
        mask[k] = true;
        ++count;
        cost += r;
      }
    }
    if (count > best_count || (count == best_count && cost < best_cost)) {
      best_count = count;
      best_cost = cost;
      best_mask = std::move(mask);
    }
  }

  if (best_count < 2) {
    throw Error(Errc::kNoConsensus, "fewer than two views agree on any hypothesis");
  }

  std::vector<Mat34> inlier_p;
  std::vector<Vec2> inlier_x;
  for (std::size_t k = 0; k < n; ++k) {
    if (best_mask[k]) {
      inlier_p.push_back(projections[k]);
      inlier_x.push_back(pixels[k]);
    }
  }
  return {triangulate_projections(inlier_p, inlier_x), std::move(best_mask)};
}

Vec3 epipole(const CameraModel& cam_i, const CameraModel& cam_j) {
  return cam_i.intrinsics() * cam_i.rotation() * (cam_j.center() - cam_i.center());
}

double pair_degeneracy_check(const CameraModel& cam_i,
                             const CameraModel& cam_j, const PixelRect& roi) {
  if ((cam_j.center() - cam_i.center()).norm() <= kMinBaseline) {
    throw Error(Errc::kCoincidentCenters, cam_i.id() + " / " + cam_j.id());
  }
  const Vec3 e = epipole(cam_i, cam_j);
  const Vec2 corners[4] = {{roi.u_min, roi.v_min},
                           {roi.u_max, roi.v_min},
                           {roi.u_min, roi.v_max},
                           {roi.u_max, roi.v_max}};
  for (const Vec2& c : corners) Line2::from_homogeneous(e.cross(c.homogeneous()));
  const double scale = e.norm();
  if (std::abs(e.z()) > 1e-12 * scale) {
    const Vec2 pole = e.hnormalized();
    if (pole.x() >= roi.u_min && pole.x() <= roi.u_max && pole.y() >= roi.v_min &&
        pole.y() <= roi.v_max) {
      return 90.0;  // lines through the epipole fan over every direction
    }
  }
  // Outside the rectangle the lines through it fill the wedge spanned by the
  // corner rays (a wedge narrower than 180 degrees). Rays are e_z x - e_xy, so
  // an epipole at infinity gives four identical rays.
  const double sign = e.z() < 0.0 ? -1.0 : 1.0;
  double angle[4];
  for (int k = 0; k < 4; ++k) {
    const Vec2 ray = sign * (e.z() * corners[k] - e.head<2>());
    angle[k] = std::atan2(ray.y(), ray.x());
  }
  double lo = 0.0;
  double hi = 0.0;
  for (int k = 1; k < 4; ++k) {
    double d = angle[k] - angle[0];
    d = std::remainder(d, 2.0 * std::numbers::pi);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double spread = std::min(hi - lo, 0.5 * std::numbers::pi);
  return spread * 180.0 / std::numbers::pi;
}

}  // namespace epidiv
