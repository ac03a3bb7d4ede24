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

// Epipolar divergence between flattened keypoint distributions, and the
// cross-view loss built from it with hand-derived reverse-mode gradients.

#ifndef EPIDIV_DIVERGENCE_HPP_
#define EPIDIV_DIVERGENCE_HPP_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "epidiv/heatmap.hpp"

namespace epidiv {

struct DivergenceConfig {
  double epsilon = 1e-6;  ///< floor inside both logarithms
  bool normalize = false; ///< rescale flats to unit sum first
  void validate() const;
};

/// sum_v q_i(v) * ln((q_i(v) + eps) / (q_ji(v) + eps)).
double epipolar_divergence(std::span<const double> q_i,
                           std::span<const double> q_ji,
                           const DivergenceConfig& cfg = {});

struct DivergenceWithGradient {
  double value = 0.0;
  std::vector<double> d_q_i;
  std::vector<double> d_q_ji;
};

DivergenceWithGradient epipolar_divergence_grad(std::span<const double> q_i,
                                                std::span<const double> q_ji,
                                                const DivergenceConfig& cfg = {});

/// Gradient of a pair loss with respect to both source heatmaps. Cells the
/// forward pass never read hold exactly zero.
struct PairGradient {
  HeatmapGradient d_i;
  HeatmapGradient d_j;
};

struct PairLoss {
  double total = 0.0;
  std::vector<double> per_channel;
  PairGradient gradient;
};

/// Flattened distributions of one channel of a pair, as seen by view i.
struct PairFlats {
  RowMax q_i;             ///< row maxima of rectified P_i
  RowMax q_j;             ///< row maxima of rectified P_j
  FlatDistribution q_ji;  ///< q_j resampled onto view i rows
};

PairFlats pair_flats(const Grid& P_i, const Grid& P_j,
                     const RectifiedPairGeometry& geom);

/// Sum over channels of D_E(Q_i || Q_{j->i}) through the rectified pipeline.
PairLoss pair_loss(const Heatmap& P_i, const Heatmap& P_j,
                   const RectifiedPairGeometry& geom,
                   const DivergenceConfig& cfg = {});

struct ViewPair {
  int i = 0;
  int j = 0;
  RectifiedPairGeometry geometry;
};

struct PairChannelLoss {
  int i = 0;
  int j = 0;
  int channel = 0;
  double loss = 0.0;
};

struct SceneLoss {
  double total = 0.0;
  std::vector<PairChannelLoss> records;
  std::vector<HeatmapGradient> gradients;  ///< one per view
};

/// Sum of pair losses over the listed ordered pairs, gradients accumulated per
/// view in list order. Pairs are evaluated on worker threads; the reduction is
/// sequential, so results are identical for any thread count.
SceneLoss scene_loss(std::span<const Heatmap> heatmaps,
                     std::span<const ViewPair> pairs,
                     const DivergenceConfig& cfg = {});

/// `pair_i,pair_j,channel,loss` rows; view names replace indices when given.
void write_loss_csv(std::ostream& os, std::span<const PairChannelLoss> records,
                    std::span<const std::string> view_names = {});

}  // namespace epidiv

#endif  // EPIDIV_DIVERGENCE_HPP_
