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

// Command-line front end: run configuration, subcommands and exit codes.

#ifndef EPIDIV_TOOLS_CLI_HPP_
#define EPIDIV_TOOLS_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "epidiv/divergence.hpp"
#include "epidiv/supervision.hpp"
#include "epidiv/synth.hpp"

namespace epidiv::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidSpec = 2,
  kDegenerateOnly = 3,
  kNonFiniteLoss = 4,
  kNothingTriangulable = 5,
  kEmptySamples = 6,
};

struct RunConfig {
  std::filesystem::path rig;
  std::filesystem::path scene;
  std::filesystem::path out;
  LossWeights weights;  // lambda_e 5, lambda_p 1
  DivergenceConfig divergence;
  OptimizerOptions optimizer;
  std::uint64_t seed = 0;
  double degeneracy_deg = kDefaultDegeneracyDeg;
  int oversample = 1;
  double confidence_floor = 0.0;
};

struct SynthOptions {
  RigSpec rig;
  int keypoints = 3;
  double keypoint_half_extent = 0.3;
  double sigma = 1.5;
  NoiseSpec noise;
  SceneOptions scene;
  /// Views that also receive exact label heatmaps.
  int labeled_views = 0;
};

enum class PseudoLabelMode { kSpatial, kTrack };

struct PseudoLabelOptions {
  std::filesystem::path annotations;
  PseudoLabelMode mode = PseudoLabelMode::kSpatial;
  int min_views = 2;
  double inlier_thresh_px = 2.0;
  int iterations = 100;
};

struct EvalOptions {
  /// Annotation records holding true image positions; the scene's own
  /// annotations are used when empty.
  std::filesystem::path truths;
  int window_width = kHeatmapSize;
};

int cmd_synth(const SynthOptions& options, const RunConfig& config, std::ostream& out);
/// Rejected pairs are reported on `log`.
int cmd_loss(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_optimize(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_pseudo_label(const PseudoLabelOptions& options, const RunConfig& config,
                     std::ostream& out);
int cmd_eval(const EvalOptions& options, const RunConfig& config, std::ostream& out);

/// Parses `args` (program name first) and dispatches; errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace epidiv::cli

#endif  // EPIDIV_TOOLS_CLI_HPP_
