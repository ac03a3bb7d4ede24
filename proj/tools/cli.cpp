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

#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "epidiv/error.hpp"
#include "epidiv/io.hpp"
#include "epidiv/metrics.hpp"

namespace epidiv::cli {
namespace {

namespace fs = std::filesystem;

std::string optional_text(const std::optional<double>& x) {
  if (!x) return "absent";
  std::ostringstream os;
  os << std::setprecision(10) << *x;
  return os.str();
}

void require_out(const RunConfig& config) {
  if (config.out.empty()) throw Error(Errc::kInvalidArgument, "--out is required");
}

std::vector<std::string> view_names(const SceneSnapshot& s) {
  std::vector<std::string> names;
  for (const ViewSnapshot& v : s.views) names.push_back(v.camera_id);
  return names;
}

void report_rejections(const PairSelection& sel, const SceneSnapshot& s, std::ostream& log) {
  for (const RejectedPair& r : sel.rejected) {
    log << "skipped pair " << s.views[static_cast<std::size_t>(r.i)].camera_id << "->"
        << s.views[static_cast<std::size_t>(r.j)].camera_id << ": " << r.reason << "\n";
  }
}

struct Loaded {
  Rig rig;
  SceneSnapshot scene;
};

Loaded load_inputs(const RunConfig& config) {
  if (config.rig.empty() || config.scene.empty()) {
    throw Error(Errc::kInvalidArgument, "--rig and --scene are required");
  }
  Loaded in{io::load_rig(config.rig), io::load_scene(config.scene)};
  in.scene.validate(in.rig);
  return in;
}

std::vector<io::AnnotationRecord> keypoint_records(int frame, const Rig& rig,
                                                   const std::vector<ViewKeypoints>& labels,
                                                   io::AnnotationSource source) {
  std::vector<io::AnnotationRecord> out;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    for (std::size_t c = 0; c < labels[v].size(); ++c) {
      if (!labels[v][c]) continue;
      out.push_back({frame, rig[v].id(), static_cast<int>(c), labels[v][c]->x(),
                     labels[v][c]->y(), source});
    }
  }
  return out;
}

}  // namespace

int cmd_synth(const SynthOptions& options, const RunConfig& config, std::ostream& out) {
  require_out(config);
  if (options.keypoints < 1 || !(options.keypoint_half_extent >= 0.0)) {
    throw Error(Errc::kInvalidArgument, "need at least one keypoint and a non-negative extent");
  }
  if (options.labeled_views < 0 || options.labeled_views > options.rig.count) {
    throw Error(Errc::kInvalidArgument, "labeled view count out of range");
  }
  const Rig rig = make_rig(options.rig);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> u(-options.keypoint_half_extent,
                                           options.keypoint_half_extent);
  std::vector<Vec3> points;
  for (int k = 0; k < options.keypoints; ++k) {
    const double x = u(rng);
    const double y = u(rng);
    const double z = u(rng);
    points.push_back(options.rig.target + Vec3(x, y, z));
  }
  SyntheticScene scene =
      make_scene(rig, points, options.sigma, options.noise, config.seed, options.scene);
  if (options.labeled_views > 0) {
    const SyntheticScene clean = make_scene(rig, points, options.sigma, {}, config.seed, options.scene);
    for (int v = 0; v < options.labeled_views; ++v) {
      scene.snapshot.views[static_cast<std::size_t>(v)].label =
          clean.snapshot.views[static_cast<std::size_t>(v)].prediction;
    }
  }

  fs::create_directories(config.out);
  io::save_rig(config.out / "rig.json", rig);
  io::save_scene(config.out / "scene", scene.snapshot);
  std::vector<ViewKeypoints> truth;
  for (const auto& per_view : scene.truth_image) {
    ViewKeypoints v;
    for (const Vec2& x : per_view) v.emplace_back(x);
    truth.push_back(std::move(v));
  }
  io::save_annotations(config.out / "truth.json",
                       keypoint_records(0, rig, truth, io::AnnotationSource::kManual));
  nlohmann::json pts = nlohmann::json::array();
  for (const Vec3& X : points) pts.push_back({X.x(), X.y(), X.z()});
  io::write_text(config.out / "points.json", pts.dump(2) + "\n");
  out << "synth: " << rig.size() << " cameras, " << points.size() << " keypoints -> "
      << config.out.string() << "\n";
  return kOk;
}

int cmd_loss(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const Loaded in = load_inputs(config);
  const PairSelection sel =
      select_pairs(in.rig, in.scene, config.degeneracy_deg, config.oversample);
  report_rejections(sel, in.scene, log);
  if (sel.pairs.empty()) {
    out << "loss: every view pair is degenerate\n";
    return kDegenerateOnly;
  }
  const TotalLoss loss = total_loss(in.scene, sel.pairs, config.weights, config.divergence);
  const auto names = view_names(in.scene);
  std::ostringstream csv;
  csv << std::setprecision(17);
  write_loss_csv(csv, loss.pair_records, names);
  std::ostringstream totals;
  totals << std::setprecision(17) << "total,L_L,L_E,L_B\n" << loss.total << ',';
  if (loss.labeled) totals << *loss.labeled;
  totals << ',';
  if (loss.epipolar) totals << *loss.epipolar;
  totals << ',';
  if (loss.bootstrap) totals << *loss.bootstrap;
  totals << '\n';
  if (config.out.empty()) {
    out << csv.str();
  } else {
    fs::create_directories(config.out);
    io::write_text(config.out / "loss.csv", csv.str());
    io::write_text(config.out / "totals.csv", totals.str());
  }
  out << "loss: total=" << optional_text(loss.total) << " L_L=" << optional_text(loss.labeled)
      << " L_E=" << optional_text(loss.epipolar) << " L_B=" << optional_text(loss.bootstrap)
      << " pairs=" << sel.pairs.size() << "\n";
  return kOk;
}

int cmd_optimize(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require_out(config);
  const Loaded in = load_inputs(config);
  const PairSelection sel =
      select_pairs(in.rig, in.scene, config.degeneracy_deg, config.oversample);
  report_rejections(sel, in.scene, log);
  if (sel.pairs.size() < 2) {
    out << "optimize: fewer than two non-degenerate view pairs\n";
    return kDegenerateOnly;
  }
  const OptimizationResult r = optimize_heatmaps(in.rig, in.scene, sel.pairs, config.weights,
                                                 config.divergence, config.optimizer);
  fs::create_directories(config.out);
  std::ostringstream csv;
  write_trajectory_csv(csv, r.trajectory);
  io::write_text(config.out / "trajectory.csv", csv.str());
  SceneSnapshot final_scene = in.scene;
  for (std::size_t v = 0; v < final_scene.views.size(); ++v) {
    final_scene.views[v].prediction = r.heatmaps[v];
  }
  io::save_scene(config.out / "final", final_scene);
  const TrajectoryRow& first = r.trajectory.front();
  const TrajectoryRow& last = r.trajectory.back();
  out << "optimize: steps=" << last.step << " loss " << first.total << " -> " << last.total
      << ", reprojection " << first.mean_reproj_px << " -> " << last.mean_reproj_px << "\n";
  return kOk;
}

int cmd_pseudo_label(const PseudoLabelOptions& options, const RunConfig& config,
                     std::ostream& out) {
  require_out(config);
  if (config.rig.empty() || options.annotations.empty()) {
    throw Error(Errc::kInvalidArgument, "--rig and --annotations are required");
  }
  const Rig rig = io::load_rig(config.rig);
  const auto records = io::load_annotations(options.annotations);
  std::map<std::string, std::size_t> view_index;
  for (std::size_t v = 0; v < rig.size(); ++v) view_index[rig[v].id()] = v;
  int max_frame = -1;
  int max_channel = -1;
  for (const auto& r : records) {
    if (!view_index.contains(r.view)) {
      throw Error(Errc::kInvalidArgument, "annotation references unknown view " + r.view);
    }
    if (r.frame < 0 || r.channel < 0) {
      throw Error(Errc::kInvalidArgument, "annotation frame and channel must be >= 0");
    }
    max_frame = std::max(max_frame, r.frame);
    max_channel = std::max(max_channel, r.channel);
  }
  const auto n_frames = static_cast<std::size_t>(max_frame + 1);
  const auto n_channels = static_cast<std::size_t>(max_channel + 1);

  std::vector<io::AnnotationRecord> result;
  int triangulated = 0;
  int dropped = 0;
  if (options.mode == PseudoLabelMode::kSpatial) {
    // [frame][view][channel]
    std::vector<std::vector<ViewKeypoints>> grid(
        n_frames, std::vector<ViewKeypoints>(rig.size(), ViewKeypoints(n_channels)));
    for (const auto& r : records) {
      grid[static_cast<std::size_t>(r.frame)][view_index[r.view]]
          [static_cast<std::size_t>(r.channel)] = Vec2(r.u, r.v);
    }
    for (std::size_t f = 0; f < n_frames; ++f) {
      const SpatialAugmentation a = spatial_augment(rig, grid[f], options.min_views);
      for (const auto& p : a.points) triangulated += p ? 1 : 0;
      for (const SkippedKeypoint& s : a.skipped) {
        out << "frame " << f << " channel " << s.channel << ": " << to_string(s.reason) << "\n";
      }
      dropped += a.dropped_out_of_bounds;
      const auto recs = keypoint_records(static_cast<int>(f), rig, a.labels,
                                         io::AnnotationSource::kSpatial);
      result.insert(result.end(), recs.begin(), recs.end());
    }
  } else {
    // Per channel: [view][frame], then regroup per frame.
    std::vector<std::vector<ViewKeypoints>> per_frame(
        n_frames, std::vector<ViewKeypoints>(rig.size(), ViewKeypoints(n_channels)));
    for (std::size_t c = 0; c < n_channels; ++c) {
      std::vector<ViewKeypoints> tracks(rig.size(), ViewKeypoints(n_frames));
      for (const auto& r : records) {
        if (static_cast<std::size_t>(r.channel) == c) {
          tracks[view_index[r.view]][static_cast<std::size_t>(r.frame)] = Vec2(r.u, r.v);
        }
      }
      const TrackAugmentation t = track_augment(rig, tracks, options.inlier_thresh_px,
                                                config.seed + c, options.iterations);
      dropped += t.dropped_out_of_bounds;
      for (const TrackFrame& fr : t.frames) {
        if (fr.failure) {
          out << "frame " << fr.frame << " channel " << c << ": " << to_string(*fr.failure) << "\n";
          continue;
        }
        ++triangulated;
        for (std::size_t v = 0; v < rig.size(); ++v) {
          per_frame[static_cast<std::size_t>(fr.frame)][v][c] = fr.labels[v];
        }
      }
    }
    for (std::size_t f = 0; f < n_frames; ++f) {
      const auto recs = keypoint_records(static_cast<int>(f), rig, per_frame[f],
                                         io::AnnotationSource::kTrack);
      result.insert(result.end(), recs.begin(), recs.end());
    }
  }
  if (triangulated == 0) {
    out << "pseudo-label: no keypoint could be triangulated\n";
    return kNothingTriangulable;
  }
  fs::create_directories(config.out);
  io::save_annotations(config.out / "pseudo_labels.json", result);
  out << "pseudo-label: " << triangulated << " keypoints triangulated, " << result.size()
      << " labels, " << dropped << " outside images\n";
  return kOk;
}

int cmd_eval(const EvalOptions& options, const RunConfig& config, std::ostream& out) {
  require_out(config);
  const Loaded in = load_inputs(config);
  // [view][channel] truths in image pixels.
  std::vector<ViewKeypoints> truths;
  for (const ViewSnapshot& v : in.scene.views) truths.push_back(v.annotations);
  if (!options.truths.empty()) {
    for (auto& t : truths) std::fill(t.begin(), t.end(), std::nullopt);
    for (const auto& r : io::load_annotations(options.truths)) {
      if (r.frame != in.scene.frame) continue;
      for (std::size_t v = 0; v < in.scene.views.size(); ++v) {
        if (in.scene.views[v].camera_id == r.view && r.channel >= 0 &&
            static_cast<std::size_t>(r.channel) < truths[v].size()) {
          truths[v][static_cast<std::size_t>(r.channel)] = Vec2(r.u, r.v);
        }
      }
    }
  }
  std::vector<Vec2> detections;
  std::vector<Vec2> expected;
  const std::vector<Heatmap> predictions = in.scene.predictions();
  for (std::size_t v = 0; v < predictions.size(); ++v) {
    const Mat3 to_heatmap = crop_to_heatmap_chain(in.scene.views[v].crop).heatmap_from_image();
    const auto found = argmax_keypoints(predictions[v]);
    for (std::size_t c = 0; c < found.size() && c < truths[v].size(); ++c) {
      if (!truths[v][c] || found[c].confidence < config.confidence_floor) continue;
      detections.push_back(found[c].position);
      expected.push_back(apply_homography(to_heatmap, *truths[v][c]));
    }
  }
  if (detections.empty()) {
    out << "eval: no detections above the confidence floor\n";
    return kEmptySamples;
  }
  const PckCurve curve = pck_curve(detections, expected, options.window_width);
  const ReprojStats reproj =
      heatmap_reprojection(in.rig, in.scene, predictions, config.confidence_floor);

  fs::create_directories(config.out);
  std::ostringstream pck;
  io::write_pck_csv(pck, curve);
  io::write_text(config.out / "pck.csv", pck.str());
  std::ostringstream residuals;
  io::write_residual_csv(residuals, reproj, view_names(in.scene));
  io::write_text(config.out / "residuals.csv", residuals.str());
  nlohmann::json summary = io::reprojection_summary(reproj);
  summary["samples"] = detections.size();
  io::write_text(config.out / "summary.json", summary.dump(2) + "\n");
  io::write_text(config.out / "pck.svg", io::pck_svg(curve));
  out << "eval: " << detections.size() << " samples, reprojection " << reproj.mean << " +/- "
      << reproj.std << " cells\n";
  return kOk;
}

namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kNonFiniteLoss:
      return kNonFiniteLoss;
    case Errc::kEmptySamples:
      return kEmptySamples;
    case Errc::kEmptyPairSet:
      return kDegenerateOnly;
    case Errc::kInvalidArgument:
      return kInvalidSpec;
    default:
      return kFailure;
  }
}

void add_paths(CLI::App* app, RunConfig& c, bool scene) {
  app->add_option("--rig", c.rig, "Rig JSON");
  if (scene) app->add_option("--scene", c.scene, "Scene JSON");
  app->add_option("--out", c.out, "Output directory");
}

void add_loss_flags(CLI::App* app, RunConfig& c) {
  app->add_option("--lambda-e", c.weights.lambda_e, "Epipolar weight")->capture_default_str();
  app->add_option("--lambda-p", c.weights.lambda_p, "Bootstrap weight")->capture_default_str();
  app->add_option("--eps", c.divergence.epsilon, "Log floor")->capture_default_str();
  app->add_flag("--normalize-flats", c.divergence.normalize,
                "Renormalize flattened distributions to unit sum");
  app->add_option("--degeneracy-deg", c.degeneracy_deg,
                  "Minimum epipolar line spread for a pair")
      ->capture_default_str();
  app->add_option("--oversample", c.oversample, "Rectified samples per heatmap cell")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Epipolar divergence toolkit", "epidiv"};
  app.require_subcommand(1);
  RunConfig config;

  SynthOptions synth;
  std::vector<double> offsets;
  std::string placement = "ring";
  auto* s = app.add_subcommand("synth", "Write a synthetic rig and scene");
  s->add_option("--out", config.out, "Output directory")->required();
  s->add_option("--seed", config.seed, "Random seed")->capture_default_str();
  s->add_option("--cameras", synth.rig.count, "Camera count")->capture_default_str();
  s->add_option("--placement", placement, "ring or sphere")
      ->check(CLI::IsMember({"ring", "sphere"}))
      ->capture_default_str();
  s->add_option("--radius", synth.rig.radius)->capture_default_str();
  s->add_option("--height-jitter", synth.rig.height_jitter)->capture_default_str();
  s->add_option("--focal-min", synth.rig.focal_min)->capture_default_str();
  s->add_option("--focal-max", synth.rig.focal_max)->capture_default_str();
  s->add_option("--image-width", synth.rig.image_width)->capture_default_str();
  s->add_option("--image-height", synth.rig.image_height)->capture_default_str();
  s->add_option("--keypoints", synth.keypoints)->capture_default_str();
  s->add_option("--keypoint-extent", synth.keypoint_half_extent, "Half size of the keypoint box")
      ->capture_default_str();
  s->add_option("--sigma", synth.sigma, "Gaussian sigma, heatmap cells")->capture_default_str();
  s->add_flag("--projected-profile", synth.scene.projected_profile,
              "Render keypoints as projected world Gaussians");
  s->add_option("--jitter", synth.noise.peak_jitter, "Peak jitter, cells")->capture_default_str();
  s->add_option("--clutter", synth.noise.clutter_blobs)->capture_default_str();
  s->add_option("--clutter-amplitude", synth.noise.clutter_amplitude)->capture_default_str();
  s->add_option("--offset", offsets, "VIEW CHANNEL DU DV peak displacement (repeatable)")
      ->type_size(4)
      ->allow_extra_args(false);
  s->add_option("--labeled-views", synth.labeled_views, "First N views get exact labels")
      ->capture_default_str();

  auto* l = app.add_subcommand("loss", "Per pair and channel losses of a scene");
  add_paths(l, config, true);
  add_loss_flags(l, config);

  auto* o = app.add_subcommand("optimize", "Gradient descent on scene heatmaps");
  add_paths(o, config, true);
  add_loss_flags(o, config);
  o->add_option("--steps", config.optimizer.steps)->capture_default_str();
  o->add_option("--step-size", config.optimizer.step_size)->capture_default_str();
  o->add_option("--logit-floor", config.optimizer.logit_floor)->capture_default_str();

  PseudoLabelOptions pseudo;
  std::string mode = "spatial";
  auto* p = app.add_subcommand("pseudo-label", "Triangulate annotations into every view");
  add_paths(p, config, false);
  p->add_option("--annotations", pseudo.annotations, "Annotation JSON")->required();
  p->add_option("--mode", mode, "spatial or track")
      ->check(CLI::IsMember({"spatial", "track"}))
      ->capture_default_str();
  p->add_option("--min-views", pseudo.min_views)->capture_default_str();
  p->add_option("--inlier-thresh", pseudo.inlier_thresh_px, "RANSAC threshold, pixels")
      ->capture_default_str();
  p->add_option("--iterations", pseudo.iterations)->capture_default_str();
  p->add_option("--seed", config.seed)->capture_default_str();

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "PCK and reprojection error of scene predictions");
  add_paths(e, config, true);
  e->add_option("--truths", eval.truths, "Annotation JSON with true positions");
  e->add_option("--confidence-floor", config.confidence_floor)->capture_default_str();
  e->add_option("--window", eval.window_width, "Detection window width, cells")
      ->capture_default_str();

  std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << ex.what() << "\n";
    return kInvalidSpec;
  }

  try {
    if (s->parsed()) {
      synth.rig.placement = placement == "sphere" ? Placement::kSphere : Placement::kRing;
      if (offsets.size() % 4 != 0) {
        throw Error(Errc::kInvalidArgument, "--offset takes VIEW CHANNEL DU DV");
      }
      for (std::size_t k = 0; k < offsets.size(); k += 4) {
        synth.noise.offsets.push_back({static_cast<int>(offsets[k]),
                                       static_cast<int>(offsets[k + 1]),
                                       Vec2(offsets[k + 2], offsets[k + 3])});
      }
      return cmd_synth(synth, config, out);
    }
    if (l->parsed()) return cmd_loss(config, out, err);
    if (o->parsed()) return cmd_optimize(config, out, err);
    if (p->parsed()) {
      pseudo.mode = mode == "track" ? PseudoLabelMode::kTrack : PseudoLabelMode::kSpatial;
      return cmd_pseudo_label(pseudo, config, out);
    }
    if (e->parsed()) return cmd_eval(eval, config, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return exit_code_for(ex.code());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace epidiv::cli
