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

#include <random>
#include <utility>
#include <vector>

#include <benchmark/benchmark.h>

#include "epidiv/divergence.hpp"
#include "epidiv/geometry.hpp"
#include "epidiv/heatmap.hpp"
#include "epidiv/supervision.hpp"
#include "epidiv/synth.hpp"

namespace epidiv {
namespace {

struct BenchScene {
  Rig rig;
  SyntheticScene scene;
};

BenchScene bench_scene(int cameras) {
  RigSpec spec;
  spec.count = cameras;
  spec.height_jitter = 0.5;
  spec.seed = 7;
  Rig rig = make_rig(spec);
  const std::vector<Vec3> points{Vec3(0.1, -0.05, 0.2), Vec3(-0.2, 0.1, 0.0), Vec3(0.0, 0.2, -0.1)};
  SyntheticScene scene = make_scene(rig, points, 1.5, {}, 7);
  return {std::move(rig), std::move(scene)};
}

void BM_Warp(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid g(kHeatmapSize, kHeatmapSize);
  for (double& x : g.values()) x = u(rng);
  Mat3 H;
  H << 1.2, 0.1, 3.0, -0.05, 0.9, 2.0, 1e-3, -5e-4, 1.0;
  const int size = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(warp(g, H, size, size));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_Warp)->Arg(46)->Arg(138)->Arg(276);

void BM_PairLoss(benchmark::State& state) {
  const auto [rig, scene] = bench_scene(4);
  const auto pairs = select_pairs(rig, scene.snapshot, kDefaultDegeneracyDeg,
                                  static_cast<int>(state.range(0)))
                         .pairs;
  const ViewPair& p = pairs.front();
  const auto& views = scene.snapshot.views;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pair_loss(views[static_cast<std::size_t>(p.i)].prediction,
                                       views[static_cast<std::size_t>(p.j)].prediction,
                                       p.geometry));
  }
}
BENCHMARK(BM_PairLoss)->Arg(1)->Arg(3);

void BM_SceneLoss(benchmark::State& state) {
  const int cameras = static_cast<int>(state.range(0));
  const auto [rig, scene] = bench_scene(cameras);
  const auto pairs = select_pairs(rig, scene.snapshot).pairs;
  const auto preds = scene.snapshot.predictions();
  for (auto _ : state) benchmark::DoNotOptimize(scene_loss(preds, pairs));
  state.counters["pairs"] = static_cast<double>(pairs.size());
}
BENCHMARK(BM_SceneLoss)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_RansacTriangulate(benchmark::State& state) {
  RigSpec spec;
  spec.count = static_cast<int>(state.range(0));
  spec.seed = 9;
  const Rig rig = make_rig(spec);
  const Vec3 X(0.1, 0.2, -0.1);
  std::vector<Vec2> pixels;
  for (std::size_t v = 0; v < rig.size(); ++v) {
    pixels.push_back(project(rig[v], X) + (v % 3 == 1 ? Vec2(50.0, 0.0) : Vec2::Zero()));
  }
  for (auto _ : state) benchmark::DoNotOptimize(ransac_triangulate(rig, pixels, 2.0, 100, 42));
}
BENCHMARK(BM_RansacTriangulate)->Arg(4)->Arg(10)->Arg(30);

}  // namespace
}  // namespace epidiv

BENCHMARK_MAIN();
