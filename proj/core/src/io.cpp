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

#include "epidiv/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "epidiv/error.hpp"

namespace epidiv::io {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> row_major(const Mat3& M) {
  return {M(0, 0), M(0, 1), M(0, 2), M(1, 0), M(1, 1), M(1, 2), M(2, 0), M(2, 1), M(2, 2)};
}

Mat3 mat3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 9) {
    throw Error(Errc::kIo, std::string(what) + " must be 9 numbers, row-major");
  }
  Mat3 M;
  for (int k = 0; k < 9; ++k) M(k / 3, k % 3) = j.at(static_cast<std::size_t>(k)).get<double>();
  return M;
}

json parse(const std::string& text, const fs::path& path) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::kIo, path.string() + ": " + e.what());
  }
}

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(Errc::kIo, std::string(what) + ": " + e.what());
  }
}

std::uint32_t to_little_endian(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((x & 0xFFu) << 24) | ((x & 0xFF00u) << 8) | ((x >> 8) & 0xFF00u) | (x >> 24);
  }
  return x;
}

fs::path payload_path(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".f32");
  return p;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::kIo, "write failed: " + path.string());
}

// --- rig --------------------------------------------------------------------

json rig_to_json(const Rig& rig) {
  json cams = json::array();
  for (const CameraModel& cam : rig) {
    json c = {{"id", cam.id()},
              {"K", row_major(cam.intrinsics())},
              {"R", row_major(cam.rotation())},
              {"C", {cam.center().x(), cam.center().y(), cam.center().z()}}};
    if (cam.has_explicit_image_size()) {
      c["image_size"] = {cam.image_width(), cam.image_height()};
    }
    cams.push_back(std::move(c));
  }
  return {{"cameras", std::move(cams)}};
}

Rig rig_from_json(const json& j) {
  return guarded("rig", [&] {
    Rig rig;
    for (const json& c : j.at("cameras")) {
      const json& C = c.at("C");
      if (!C.is_array() || C.size() != 3) throw Error(Errc::kIo, "camera C must be 3 numbers");
      int w = 0, h = 0;
      if (c.contains("image_size")) {
        w = c.at("image_size").at(0).get<int>();
        h = c.at("image_size").at(1).get<int>();
      }
      rig.emplace_back(c.at("id").get<std::string>(), mat3_from(c.at("K"), "K"),
                       mat3_from(c.at("R"), "R"),
                       Vec3(C[0].get<double>(), C[1].get<double>(), C[2].get<double>()), w, h);
    }
    for (std::size_t a = 0; a < rig.size(); ++a) {
      for (std::size_t b = a + 1; b < rig.size(); ++b) {
        if (rig[a].id() == rig[b].id()) throw Error(Errc::kIo, "duplicate camera id " + rig[a].id());
      }
    }
    return rig;
  });
}

Rig load_rig(const fs::path& path) { return rig_from_json(parse(read_text(path), path)); }

void save_rig(const fs::path& path, const Rig& rig) {
  write_text(path, rig_to_json(rig).dump(2) + "\n");
}

// --- crop ---------------------------------------------------------------------

json crop_to_json(const CropTransform& t) {
  return {{"u_x", t.u_x}, {"u_y", t.u_y}, {"h_b", t.h_b}, {"w_x", t.w_x},
          {"w_y", t.w_y}, {"h_c", t.h_c}, {"h_h", t.h_h}};
}

CropTransform crop_from_json(const json& j) {
  return guarded("crop", [&] {
    CropTransform t;
    t.u_x = j.at("u_x").get<double>();
    t.u_y = j.at("u_y").get<double>();
    t.h_b = j.at("h_b").get<double>();
    t.w_x = j.at("w_x").get<double>();
    t.w_y = j.at("w_y").get<double>();
    t.h_c = j.at("h_c").get<double>();
    t.h_h = j.at("h_h").get<double>();
    t.validate();
    return t;
  });
}

// --- heatmap tensors -----------------------------------------------------------

void save_heatmap(const fs::path& manifest, const Heatmap& h) {
  const fs::path payload = payload_path(manifest);
  json m = {{"W", h.width()},
            {"H", h.height()},
            {"C", h.channels()},
            {"dtype", "f32"},
            {"order", "row-major, channel-outermost"},
            {"payload", payload.filename().string()}};
  write_text(manifest, m.dump(2) + "\n");

  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(h.width()) * h.height() * h.channels() * 4);
  for (int c = 0; c < h.channels(); ++c) {
    for (double x : h.channel(c).values()) {
      const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(x)));
      char raw[4];
      std::memcpy(raw, &bits, 4);
      bytes.append(raw, 4);
    }
  }
  write_text(payload, bytes);
}

Heatmap load_heatmap(const fs::path& manifest) {
  const json m = parse(read_text(manifest), manifest);
  return guarded("heatmap manifest", [&] {
    const int W = m.at("W").get<int>();
    const int H = m.at("H").get<int>();
    const int C = m.at("C").get<int>();
    if (m.at("dtype").get<std::string>() != "f32") throw Error(Errc::kIo, "only f32 tensors are supported");
    if (W < 2 || H < 2 || C < 1) throw Error(Errc::kIo, "invalid tensor shape");
    fs::path payload = payload_path(manifest);
    if (m.contains("payload")) payload = manifest.parent_path() / m.at("payload").get<std::string>();
    const std::string bytes = read_text(payload);
    const std::size_t count = static_cast<std::size_t>(W) * H * C;
    if (bytes.size() != count * 4) {
      throw Error(Errc::kIo, payload.string() + ": expected " + std::to_string(count * 4) +
                                 " bytes, found " + std::to_string(bytes.size()));
    }
    std::vector<Grid> channels;
    std::size_t offset = 0;
    for (int c = 0; c < C; ++c) {
      Grid g(W, H);
      for (double& x : g.values()) {
        std::uint32_t bits;
        std::memcpy(&bits, bytes.data() + offset, 4);
        offset += 4;
        x = static_cast<double>(std::bit_cast<float>(to_little_endian(bits)));
      }
      channels.push_back(std::move(g));
    }
    return Heatmap(std::move(channels));
  });
}

// --- annotations ------------------------------------------------------------

std::string to_string(AnnotationSource s) {
  switch (s) {
    case AnnotationSource::kManual: return "manual";
    case AnnotationSource::kSpatial: return "spatial";
    case AnnotationSource::kTrack: return "track";
  }
  return "manual";
}

AnnotationSource annotation_source_from_string(const std::string& s) {
  if (s == "manual") return AnnotationSource::kManual;
  if (s == "spatial") return AnnotationSource::kSpatial;
  if (s == "track") return AnnotationSource::kTrack;
  throw Error(Errc::kIo, "unknown annotation source '" + s + "'");
}

json annotations_to_json(std::span<const AnnotationRecord> records) {
  json out = json::array();
  for (const AnnotationRecord& r : records) {
    out.push_back({{"frame", r.frame}, {"view", r.view}, {"channel", r.channel},
                   {"u", r.u}, {"v", r.v}, {"source", to_string(r.source)}});
  }
  return out;
}

std::vector<AnnotationRecord> annotations_from_json(const json& j) {
  return guarded("annotations", [&] {
    std::vector<AnnotationRecord> out;
    for (const json& r : j) {
      out.push_back({r.at("frame").get<int>(), r.at("view").get<std::string>(),
                     r.at("channel").get<int>(), r.at("u").get<double>(),
                     r.at("v").get<double>(),
                     annotation_source_from_string(r.at("source").get<std::string>())});
    }
    return out;
  });
}

std::vector<AnnotationRecord> load_annotations(const fs::path& path) {
  return annotations_from_json(parse(read_text(path), path));
}

void save_annotations(const fs::path& path, std::span<const AnnotationRecord> records) {
  write_text(path, annotations_to_json(records).dump(2) + "\n");
}

// --- scenes -------------------------------------------------------------------

void save_scene(const fs::path& dir, const SceneSnapshot& snapshot) {
  if (snapshot.views.empty()) throw Error(Errc::kInvalidArgument, "cannot save an empty scene");
  fs::create_directories(dir);
  const Heatmap& ref = snapshot.views.front().prediction;
  json views = json::array();
  std::vector<AnnotationRecord> records;
  for (const ViewSnapshot& v : snapshot.views) {
    json jv = {{"camera", v.camera_id}, {"crop", crop_to_json(v.crop)}};
    const std::string pred = v.camera_id + "_prediction.json";
    save_heatmap(dir / pred, v.prediction);
    jv["prediction"] = pred;
    if (v.label) {
      const std::string name = v.camera_id + "_label.json";
      save_heatmap(dir / name, *v.label);
      jv["label"] = name;
    }
    if (v.pseudo_label) {
      const std::string name = v.camera_id + "_pseudo_label.json";
      save_heatmap(dir / name, *v.pseudo_label);
      jv["pseudo_label"] = name;
    }
    views.push_back(std::move(jv));
    for (std::size_t c = 0; c < v.annotations.size(); ++c) {
      if (!v.annotations[c]) continue;
      records.push_back({snapshot.frame, v.camera_id, static_cast<int>(c),
                         v.annotations[c]->x(), v.annotations[c]->y(),
                         AnnotationSource::kManual});
    }
  }
  const json scene = {{"frame", snapshot.frame},
                      {"W", ref.width()},
                      {"H", ref.height()},
                      {"C", ref.channels()},
                      {"views", std::move(views)},
                      {"annotations", annotations_to_json(records)}};
  write_text(dir / "scene.json", scene.dump(2) + "\n");
}

SceneSnapshot load_scene(const fs::path& scene_json) {
  const json j = parse(read_text(scene_json), scene_json);
  const fs::path dir = scene_json.parent_path();
  return guarded("scene", [&] {
    SceneSnapshot s;
    s.frame = j.at("frame").get<int>();
    const int C = j.at("C").get<int>();
    for (const json& jv : j.at("views")) {
      ViewSnapshot v;
      v.camera_id = jv.at("camera").get<std::string>();
      v.crop = crop_from_json(jv.at("crop"));
      v.prediction = load_heatmap(dir / jv.at("prediction").get<std::string>());
      if (jv.contains("label")) v.label = load_heatmap(dir / jv.at("label").get<std::string>());
      if (jv.contains("pseudo_label")) {
        v.pseudo_label = load_heatmap(dir / jv.at("pseudo_label").get<std::string>());
      }
      v.annotations.assign(static_cast<std::size_t>(C), std::nullopt);
      s.views.push_back(std::move(v));
    }
    if (j.contains("annotations")) {
      for (const AnnotationRecord& r : annotations_from_json(j.at("annotations"))) {
        for (ViewSnapshot& v : s.views) {
          if (v.camera_id == r.view && r.channel >= 0 && r.channel < C) {
            v.annotations[static_cast<std::size_t>(r.channel)] = Vec2(r.u, r.v);
          }
        }
      }
    }
    return s;
  });
}

// --- reports ------------------------------------------------------------------

void write_pck_csv(std::ostream& os, const PckCurve& curve) {
  const auto old = os.precision(17);
  os << "threshold,pck\n";
  for (std::size_t k = 0; k < curve.thresholds.size(); ++k) {
    os << curve.thresholds[k] << ',' << curve.values[k] << '\n';
  }
  os.precision(old);
}

void write_residual_csv(std::ostream& os, const ReprojStats& stats,
                        std::span<const std::string> view_names) {
  const auto old = os.precision(17);
  os << "view,channel,residual_px\n";
  for (const Residual& r : stats.residuals) {
    if (r.view >= 0 && static_cast<std::size_t>(r.view) < view_names.size()) {
      os << view_names[static_cast<std::size_t>(r.view)];
    } else {
      os << r.view;
    }
    os << ',' << r.channel << ',' << r.pixels << '\n';
  }
  os.precision(old);
}

json reprojection_summary(const ReprojStats& stats) {
  return {{"mean", stats.mean},
          {"std", stats.std},
          {"residuals", stats.residuals.size()},
          {"excluded_channels", stats.excluded_channels}};
}

std::string pck_svg(const PckCurve& curve, const std::string& title) {
  constexpr double kW = 480, kH = 360, kMargin = 48;
  const double t_max = curve.thresholds.empty() ? 1.0 : std::max(curve.thresholds.back(), 1e-9);
  const auto x_of = [&](double t) { return kMargin + (kW - 2 * kMargin) * t / t_max; };
  const auto y_of = [&](double p) { return kH - kMargin - (kH - 2 * kMargin) * p; };
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">"
    << title << "</text>\n";
  s << "<line x1=\"" << kMargin << "\" y1=\"" << y_of(0) << "\" x2=\"" << kW - kMargin
    << "\" y2=\"" << y_of(0) << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kMargin << "\" y1=\"" << y_of(0) << "\" x2=\"" << kMargin << "\" y2=\""
    << y_of(1) << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">normalized distance</text>\n";
  s << "<text x=\"" << kMargin - 8 << "\" y=\"" << y_of(1) + 4
    << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1</text>\n";
  s << "<text x=\"" << kMargin - 8 << "\" y=\"" << y_of(0) + 4
    << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">0</text>\n";
  s << "<text x=\"" << kW - kMargin << "\" y=\"" << y_of(0) + 16
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << t_max
    << "</text>\n";
  s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < curve.thresholds.size(); ++k) {
    if (k) s << ' ';
    s << x_of(curve.thresholds[k]) << ',' << y_of(curve.values[k]);
  }
  s << "\"/>\n</svg>\n";
  return s.str();
}

}  // namespace epidiv::io
