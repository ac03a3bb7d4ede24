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

#include "epidiv/divergence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

#include "epidiv/error.hpp"

namespace epidiv {
namespace {

double sum(std::span<const double> q) {
  double s = 0.0;
  for (double x : q) s += x;
  return s;
}

// q / sum(q), or all zeros for an empty distribution.
std::vector<double> normalized(std::span<const double> q, double& total) {
  total = sum(q);
  std::vector<double> out(q.begin(), q.end());
  if (total > 0.0) {
    for (double& x : out) x /= total;
  } else {
    std::fill(out.begin(), out.end(), 0.0);
  }
  return out;
}

// Pulls a gradient with respect to q / sum(q) back to q.
void normalize_backward(std::vector<double>& grad, std::span<const double> q_hat,
                        double total) {
  if (!(total > 0.0)) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return;
  }
  double dot = 0.0;
  for (std::size_t k = 0; k < grad.size(); ++k) dot += grad[k] * q_hat[k];
  for (double& g : grad) g = (g - dot) / total;
}

void check_lengths(std::span<const double> q_i, std::span<const double> q_ji) {
  if (q_i.size() != q_ji.size()) {
    throw Error(Errc::kLengthMismatch, "flat distributions differ in length: " +
                                           std::to_string(q_i.size()) + " vs " +
                                           std::to_string(q_ji.size()));
  }
}

}  // namespace

void DivergenceConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(Errc::kInvalidArgument, "divergence epsilon must be positive");
  }
}

double epipolar_divergence(std::span<const double> q_i,
                           std::span<const double> q_ji,
                           const DivergenceConfig& cfg) {
  return epipolar_divergence_grad(q_i, q_ji, cfg).value;
}

DivergenceWithGradient epipolar_divergence_grad(std::span<const double> q_i,
                                                std::span<const double> q_ji,
                                                const DivergenceConfig& cfg) {
  cfg.validate();
  check_lengths(q_i, q_ji);
  const std::size_t n = q_i.size();

  double total_i = 1.0, total_ji = 1.0;
  std::vector<double> p, r;
  if (cfg.normalize) {
    p = normalized(q_i, total_i);
    r = normalized(q_ji, total_ji);
  } else {
    p.assign(q_i.begin(), q_i.end());
    r.assign(q_ji.begin(), q_ji.end());
  }

  const double eps = cfg.epsilon;
  DivergenceWithGradient out;
  out.d_q_i.resize(n);
  out.d_q_ji.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    const double log_ratio = std::log((p[v] + eps) / (r[v] + eps));
    out.value += p[v] * log_ratio;
    out.d_q_i[v] = log_ratio + p[v] / (p[v] + eps);
    out.d_q_ji[v] = -p[v] / (r[v] + eps);
  }
  if (cfg.normalize) {
    normalize_backward(out.d_q_i, p, total_i);
    normalize_backward(out.d_q_ji, r, total_ji);
  }
  return out;
}

PairFlats pair_flats(const Grid& P_i, const Grid& P_j,
                     const RectifiedPairGeometry& geom) {
  PairFlats f;
  f.q_i = warped_row_max(P_i, geom.chain_i, geom.width, geom.height);
  f.q_j = warped_row_max(P_j, geom.chain_j, geom.width, geom.height);
  // Rows correspond as v_i = a v_j + b, so row v of view i reads view j at
  // (v - b) / a.
  f.q_ji = resample_flat(f.q_j.values, 1.0 / geom.a, -geom.b / geom.a, geom.height);
  return f;
}

PairLoss pair_loss(const Heatmap& P_i, const Heatmap& P_j,
                   const RectifiedPairGeometry& geom,
                   const DivergenceConfig& cfg) {
  if (P_i.channels() != P_j.channels()) {
    throw Error(Errc::kShapeMismatch, "pair heatmaps have different channel counts");
  }
  cfg.validate();
  if (geom.a == 0.0) throw Error(Errc::kZeroScale, "pair geometry has a = 0");

  PairLoss out;
  out.gradient.d_i = zero_gradient(P_i);
  out.gradient.d_j = zero_gradient(P_j);
  out.per_channel.reserve(static_cast<std::size_t>(P_i.channels()));

  for (int c = 0; c < P_i.channels(); ++c) {
    const PairFlats f = pair_flats(P_i.channel(c), P_j.channel(c), geom);
    const DivergenceWithGradient d = epipolar_divergence_grad(f.q_i.values, f.q_ji, cfg);
    out.per_channel.push_back(d.value);
    out.total += d.value;

    const std::vector<double> d_q_j =
        resample_flat_backward(d.d_q_ji, 1.0 / geom.a, -geom.b / geom.a, geom.height);

    // Max subgradient: each row's gradient goes to its recorded argmax cell.
    out.gradient.d_i[static_cast<std::size_t>(c)] = warped_row_max_backward(
        d.d_q_i, f.q_i.argmax, geom.chain_i, P_i.width(), P_i.height());
    out.gradient.d_j[static_cast<std::size_t>(c)] = warped_row_max_backward(
        d_q_j, f.q_j.argmax, geom.chain_j, P_j.width(), P_j.height());
  }
  return out;
}

SceneLoss scene_loss(std::span<const Heatmap> heatmaps,
                     std::span<const ViewPair> pairs,
                     const DivergenceConfig& cfg) {
  if (pairs.empty()) throw Error(Errc::kEmptyPairSet, "scene loss needs at least one view pair");
  const int n_views = static_cast<int>(heatmaps.size());
  SceneLoss out;
  out.gradients.reserve(heatmaps.size());
  for (const Heatmap& h : heatmaps) out.gradients.push_back(zero_gradient(h));

  for (const ViewPair& pair : pairs) {
    if (pair.i < 0 || pair.j < 0 || pair.i >= n_views || pair.j >= n_views || pair.i == pair.j) {
      throw Error(Errc::kInvalidArgument, "pair references an invalid view index");
    }
  }

  // Pairs are evaluated concurrently into their own slots, then reduced in
  // list order so the result does not depend on scheduling.
  std::vector<PairLoss> losses(pairs.size());
  std::vector<std::exception_ptr> failures(pairs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < pairs.size(); k = next++) {
      try {
        const ViewPair& pair = pairs[k];
        losses[k] = pair_loss(heatmaps[static_cast<std::size_t>(pair.i)],
                              heatmaps[static_cast<std::size_t>(pair.j)], pair.geometry, cfg);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(pairs.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : failures) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const ViewPair& pair = pairs[k];
    const auto i = static_cast<std::size_t>(pair.i);
    const auto j = static_cast<std::size_t>(pair.j);
    const PairLoss& pl = losses[k];
    out.total += pl.total;
    for (std::size_t c = 0; c < pl.per_channel.size(); ++c) {
      out.records.push_back({pair.i, pair.j, static_cast<int>(c), pl.per_channel[c]});
      out.gradients[i][c] += pl.gradient.d_i[c];
      out.gradients[j][c] += pl.gradient.d_j[c];
    }
  }
  return out;
}

void write_loss_csv(std::ostream& os, std::span<const PairChannelLoss> records,
                    std::span<const std::string> view_names) {
  const auto name = [&](int v) {
    if (v >= 0 && static_cast<std::size_t>(v) < view_names.size()) {
      return view_names[static_cast<std::size_t>(v)];
    }
    return std::to_string(v);
  };
  os << "pair_i,pair_j,channel,loss\n";
  const auto old = os.precision(17);
  for (const auto& r : records) {
    os << name(r.i) << ',' << name(r.j) << ',' << r.channel << ',' << r.loss << '\n';
  }
  os.precision(old);
}

}  // namespace epidiv
