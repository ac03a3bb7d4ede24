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

// Shared fixtures for the test suites: random cameras and finite differences.

#ifndef EPIDIV_TESTS_SUPPORT_HPP_
#define EPIDIV_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "epidiv/geometry.hpp"
#include "epidiv/heatmap.hpp"

namespace epidiv::testing {

inline Mat3 look_at_rotation(const Vec3& center, const Vec3& target) {
  const Vec3 z = (target - center).normalized();
  Vec3 up(0.0, 0.0, 1.0);
  if (std::abs(z.dot(up)) > 0.99) up = Vec3(0.0, 1.0, 0.0);
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  return R;
}

inline Mat3 intrinsics(double fx, double fy, double px, double py) {
  Mat3 K;
  K << fx, 0.0, px, 0.0, fy, py, 0.0, 0.0, 1.0;
  return K;
}

/// Camera 3 to 5 units from the origin looking near it, heterogeneous
/// intrinsics.
inline CameraModel random_camera(std::mt19937_64& rng, const std::string& id) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> r(3.0, 5.0);
  std::uniform_real_distribution<double> f(500.0, 1500.0);
  std::uniform_real_distribution<double> p(300.0, 700.0);
  Vec3 dir;
  do {
    dir = Vec3(u(rng), u(rng), 0.6 * u(rng));
  } while (dir.norm() < 0.2);
  const Vec3 C = r(rng) * dir.normalized();
  const Vec3 target(0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng));
  const double fx = f(rng);
  return CameraModel(id, intrinsics(fx, fx * (0.9 + 0.2 * (u(rng) + 1.0) / 2.0), p(rng), p(rng)),
                     look_at_rotation(C, target), C);
}

inline Vec3 random_point(std::mt19937_64& rng, double half = 0.5) {
  std::uniform_real_distribution<double> u(-half, half);
  return {u(rng), u(rng), u(rng)};
}

/// Independent pinhole projection, written out without the library.
inline Vec2 reference_projection(const Mat3& K, const Mat3& R, const Vec3& C,
                                 const Vec3& X) {
  const double d0 = X.x() - C.x();
  const double d1 = X.y() - C.y();
  const double d2 = X.z() - C.z();
  double cam[3];
  for (int r = 0; r < 3; ++r) cam[r] = R(r, 0) * d0 + R(r, 1) * d1 + R(r, 2) * d2;
  const double u = K(0, 0) * cam[0] / cam[2] + K(0, 2);
  const double v = K(1, 1) * cam[1] / cam[2] + K(1, 2);
  return {u, v};
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

struct FdReport {
  int checked = 0;
  int skipped_ties = 0;
  double worst_relative = 0.0;
};

/// Central differences on `count` random cells of `views`. `loss` evaluates
/// the scalar; `signature` identifies the active max branches, and a cell is
/// skipped when either probe changes it. Cells with |analytic| below `floor`
/// are not drawn.
inline FdReport finite_difference_check(
    std::vector<Heatmap> views, const std::vector<HeatmapGradient>& analytic,
    const std::function<double(const std::vector<Heatmap>&)>& loss,
    const std::function<std::vector<int>(const std::vector<Heatmap>&)>& signature,
    std::mt19937_64& rng, int count, double step = 1e-4, double floor = 1e-6) {
  struct Cell {
    int view, channel, u, v;
  };
  std::vector<Cell> cells;
  for (int i = 0; i < static_cast<int>(views.size()); ++i) {
    const Heatmap& h = views[static_cast<std::size_t>(i)];
    for (int c = 0; c < h.channels(); ++c) {
      for (int v = 0; v < h.height(); ++v) {
        for (int u = 0; u < h.width(); ++u) {
          const double x = h.channel(c)(u, v);
          const double g = analytic[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)](u, v);
          if (std::abs(g) >= floor && x > 2.0 * step && x < 1.0 - 2.0 * step) {
            cells.push_back({i, c, u, v});
          }
        }
      }
    }
  }
  std::shuffle(cells.begin(), cells.end(), rng);
  const std::vector<int> base = signature(views);
  FdReport report;
  for (const Cell& cell : cells) {
    if (report.checked == count) break;
    Heatmap& h = views[static_cast<std::size_t>(cell.view)];
    const double x = h.channel(cell.channel)(cell.u, cell.v);
    h.set(cell.channel, cell.u, cell.v, x + step);
    const double plus = loss(views);
    const bool plus_ok = signature(views) == base;
    h.set(cell.channel, cell.u, cell.v, x - step);
    const double minus = loss(views);
    const bool minus_ok = signature(views) == base;
    h.set(cell.channel, cell.u, cell.v, x);
    if (!plus_ok || !minus_ok) {
      ++report.skipped_ties;
      continue;
    }
    const double numeric = (plus - minus) / (2.0 * step);
    const double g = analytic[static_cast<std::size_t>(cell.view)]
                             [static_cast<std::size_t>(cell.channel)](cell.u, cell.v);
    report.worst_relative = std::max(report.worst_relative, relative_error(g, numeric));
    ++report.checked;
  }
  return report;
}

}  // namespace epidiv::testing

#endif  // EPIDIV_TESTS_SUPPORT_HPP_
