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

// File formats: rig JSON, heatmap tensors (JSON manifest + raw float32
// payload), crop transforms, annotation records, scenes, and metric reports.

#ifndef EPIDIV_IO_HPP_
#define EPIDIV_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epidiv/geometry.hpp"
#include "epidiv/heatmap.hpp"
#include "epidiv/metrics.hpp"
#include "epidiv/supervision.hpp"

namespace epidiv::io {

nlohmann::json rig_to_json(const Rig& rig);
Rig rig_from_json(const nlohmann::json& j);
Rig load_rig(const std::filesystem::path& path);
void save_rig(const std::filesystem::path& path, const Rig& rig);

nlohmann::json crop_to_json(const CropTransform& crop);
CropTransform crop_from_json(const nlohmann::json& j);

/// Writes `manifest` and the float32 payload next to it (same stem, `.f32`).
void save_heatmap(const std::filesystem::path& manifest, const Heatmap& h);
Heatmap load_heatmap(const std::filesystem::path& manifest);

enum class AnnotationSource { kManual, kSpatial, kTrack };

std::string to_string(AnnotationSource s);
AnnotationSource annotation_source_from_string(const std::string& s);

struct AnnotationRecord {
  int frame = 0;
  std::string view;
  int channel = 0;
  double u = 0.0;
  double v = 0.0;
  AnnotationSource source = AnnotationSource::kManual;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

nlohmann::json annotations_to_json(std::span<const AnnotationRecord> records);
std::vector<AnnotationRecord> annotations_from_json(const nlohmann::json& j);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path,
                      std::span<const AnnotationRecord> records);

/// `scene.json` plus one tensor per view heatmap inside `dir`.
void save_scene(const std::filesystem::path& dir, const SceneSnapshot& snapshot);
SceneSnapshot load_scene(const std::filesystem::path& scene_json);

void write_pck_csv(std::ostream& os, const PckCurve& curve);
void write_residual_csv(std::ostream& os, const ReprojStats& stats,
                        std::span<const std::string> view_names = {});
nlohmann::json reprojection_summary(const ReprojStats& stats);
/// Minimal standalone SVG line plot of a PCK curve.
std::string pck_svg(const PckCurve& curve, const std::string& title = "PCK");

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace epidiv::io

#endif  // EPIDIV_IO_HPP_
