// Copyright 2026 The clicktal Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Feature sequences, annotations and the dataset manifest.
//
// Feature file layout (all little-endian):
//   bytes 0..3   magic "CTFS"
//   bytes 4..7   u32 D_in
//   bytes 8..11  u32 T_raw
//   then T_raw * D_in f32 values, time-major (all channels of frame 0,
//   then frame 1, ...).

#include "clicktal/common.hpp"
#include "clicktal/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace clicktal {

using json = nlohmann::json;

inline constexpr std::array<std::uint8_t, 4> kFeatureMagic = {'C', 'T', 'F', 'S'};

class FormatError : public Error {
 public:
  using Error::Error;
};
class HeaderError : public FormatError {
 public:
  using FormatError::FormatError;
};
class PayloadSizeError : public FormatError {
 public:
  using FormatError::FormatError;
};
class NonFiniteError : public FormatError {
 public:
  using FormatError::FormatError;
};
class SchemaError : public FormatError {
 public:
  using FormatError::FormatError;
};

struct FeatureSequence {
  std::string video_id;
  Matrix data;  // D_in x T
  double fps_of_snippets = 0.0;

  int dim() const { return static_cast<int>(data.rows()); }
  int length() const { return static_cast<int>(data.cols()); }
};

struct GroundTruthSegment {
  double start_sec = 0.0;
  double end_sec = 0.0;
  int class_id = 1;

  friend bool operator==(const GroundTruthSegment&, const GroundTruthSegment&) = default;
};

struct ActionClick {
  double time_sec = 0.0;
  int frame = 0;
  int class_id = 1;

  friend bool operator==(const ActionClick&, const ActionClick&) = default;
};

struct VideoAnnotation {
  std::string video_id;
  std::vector<int> labels;  // size C+1, index 0 reserved for background
  std::vector<int> clicks;  // size T, values in {-1, 1}
  std::vector<double> click_times_sec;
  std::vector<ActionClick> action_clicks;
  std::vector<GroundTruthSegment> segments;  // simulation / evaluation only
  double duration_sec = 0.0;

  int num_classes() const { return static_cast<int>(labels.size()) - 1; }

  std::vector<int> gt_classes() const {
    std::vector<int> out;
    for (int c = 1; c < static_cast<int>(labels.size()); ++c)
      if (labels[c] != 0) out.push_back(c);
    return out;
  }

  int num_background_clicks() const {
    return static_cast<int>(std::count(clicks.begin(), clicks.end(), kBackground));
  }

  friend bool operator==(const VideoAnnotation&, const VideoAnnotation&) = default;
};

struct VideoEntry {
  std::string video_id;
  std::string feature_path;     // relative to the manifest directory
  std::string annotation_path;  // relative to the manifest directory
  double duration_sec = 0.0;
  std::string subset;  // "train" or "test"; empty means unspecified
};

struct DatasetManifest {
  std::vector<std::string> class_names;
  std::vector<VideoEntry> videos;
  int T_fixed = 0;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// ---------------------------------------------------------------------------
// Feature files

inline io::Bytes encode_feature_file(const FeatureSequence& seq) {
  io::Bytes out(kFeatureMagic.begin(), kFeatureMagic.end());
  out.reserve(12 + 4 * static_cast<std::size_t>(seq.data.size()));
  io::put_u32(out, static_cast<std::uint32_t>(seq.data.rows()));
  io::put_u32(out, static_cast<std::uint32_t>(seq.data.cols()));
  for (Eigen::Index t = 0; t < seq.data.cols(); ++t)
    for (Eigen::Index d = 0; d < seq.data.rows(); ++d)
      io::put_f32(out, static_cast<float>(seq.data(d, t)));
  return out;
}

inline FeatureSequence decode_feature_file(std::span<const std::uint8_t> bytes, std::string video_id = {}) {
  if (bytes.size() < 12) throw HeaderError("feature file shorter than its 12-byte header");
  if (!std::equal(kFeatureMagic.begin(), kFeatureMagic.end(), bytes.begin()))
    throw HeaderError("bad feature file magic");
  io::Reader r(bytes.subspan(4));
  const std::uint32_t dim = r.u32();
  const std::uint32_t len = r.u32();
  if (dim == 0 || len == 0) throw HeaderError("feature header declares an empty matrix");
  const std::uint64_t expected = 4ULL * dim * len;
  if (r.remaining() != expected)
    throw PayloadSizeError("feature payload has " + std::to_string(r.remaining()) + " bytes, header declares " +
                           std::to_string(expected));
  FeatureSequence seq;
  seq.video_id = std::move(video_id);
  seq.data.resize(dim, len);
  for (std::uint32_t t = 0; t < len; ++t)
    for (std::uint32_t d = 0; d < dim; ++d) {
      const float v = r.f32();
      if (!std::isfinite(v))
        throw NonFiniteError("non-finite feature value at frame " + std::to_string(t) + ", channel " +
                             std::to_string(d));
      seq.data(d, t) = v;
    }
  return seq;
}

inline FeatureSequence load_feature_file(const std::filesystem::path& path, std::string video_id = {}) {
  const io::Bytes bytes = io::read_file(path);
  if (video_id.empty()) video_id = path.stem().string();
  return decode_feature_file(bytes, std::move(video_id));
}

inline void write_feature_file(const std::filesystem::path& path, const FeatureSequence& seq) {
  require(seq.data.size() > 0, "write_feature_file: empty matrix");
  require(seq.data.allFinite(), "write_feature_file: non-finite values");
  io::write_file_atomic(path, encode_feature_file(seq));
}

// ---------------------------------------------------------------------------
// Temporal rescaling and time mapping

/// Linear interpolation of every channel onto `fixed_length` evenly spaced
/// positions t * (T_raw - 1) / (fixed_length - 1).
inline FeatureSequence rescale_to_fixed_length(const FeatureSequence& seq, int fixed_length) {
  require(fixed_length >= 2, "rescale_to_fixed_length: T_fixed must be >= 2");
  const Eigen::Index raw = seq.data.cols();
  require(raw > 0, "rescale_to_fixed_length: empty sequence");
  FeatureSequence out;
  out.video_id = seq.video_id;
  out.data.resize(seq.data.rows(), fixed_length);
  if (raw == fixed_length) {
    out.data = seq.data;
  } else {
    for (int t = 0; t < fixed_length; ++t) {
      const double pos = static_cast<double>(t) * static_cast<double>(raw - 1) / (fixed_length - 1);
      auto lo = static_cast<Eigen::Index>(std::floor(pos));
      lo = std::min(lo, raw - 1);
      const Eigen::Index hi = std::min(lo + 1, raw - 1);
      const double frac = pos - static_cast<double>(lo);
      out.data.col(t) = (1.0 - frac) * seq.data.col(lo) + frac * seq.data.col(hi);
    }
  }
  out.fps_of_snippets = seq.fps_of_snippets * static_cast<double>(fixed_length) / static_cast<double>(raw);
  return out;
}

inline int map_time_to_frame(double t_sec, double duration_sec, int fixed_length) {
  require(duration_sec > 0.0, "map_time_to_frame: duration must be positive");
  require(fixed_length >= 1, "map_time_to_frame: T_fixed must be positive");
  const double f = std::floor(t_sec / duration_sec * fixed_length);
  return static_cast<int>(std::clamp(f, 0.0, static_cast<double>(fixed_length - 1)));
}

/// Seconds at which frame `frame` begins on a `fixed_length` grid.
inline double frame_to_time(double frame, double duration_sec, int fixed_length) {
  return frame * duration_sec / fixed_length;
}

/// Frames whose centre lies inside a ground-truth segment, per class; row 0
/// marks frames covered by any class.
inline std::vector<std::vector<bool>> action_frame_masks(const std::vector<GroundTruthSegment>& segments,
                                                         double duration_sec, int fixed_length, int num_classes) {
  std::vector<std::vector<bool>> mask(num_classes + 1, std::vector<bool>(fixed_length, false));
  for (const auto& s : segments) {
    for (int t = 0; t < fixed_length; ++t) {
      const double centre = frame_to_time(t + 0.5, duration_sec, fixed_length);
      if (centre >= s.start_sec && centre < s.end_sec) {
        mask[0][t] = true;
        if (s.class_id >= 1 && s.class_id <= num_classes) mask[s.class_id][t] = true;
      }
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// JSON documents

inline json to_json(const GroundTruthSegment& s) {
  return {{"start_sec", s.start_sec}, {"end_sec", s.end_sec}, {"class_id", s.class_id}};
}

inline json to_json(const VideoAnnotation& a) {
  json segs = json::array();
  for (const auto& s : a.segments) segs.push_back(to_json(s));
  json acts = json::array();
  for (const auto& c : a.action_clicks)
    acts.push_back({{"time_sec", c.time_sec}, {"frame", c.frame}, {"class_id", c.class_id}});
  return {{"video_id", a.video_id},
          {"labels", a.labels},
          {"clicks", a.clicks},
          {"click_times_sec", a.click_times_sec},
          {"action_clicks", acts},
          {"segments", segs},
          {"duration_sec", a.duration_sec}};
}

namespace detail {

inline const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw SchemaError(std::string("missing field '") + name + "'");
  return j.at(name);
}

template <class T>
T typed(const json& j, const char* name) {
  try {
    return field(j, name).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("field '") + name + "' has the wrong type: " + e.what());
  }
}

}  // namespace detail

/// Structural checks on an annotation document. `num_classes` / `fixed_length`
/// of zero skip the corresponding length checks.
inline void validate_annotation(const VideoAnnotation& a, int num_classes = 0, int fixed_length = 0) {
  if (a.video_id.empty()) throw SchemaError("annotation has an empty video_id");
  if (a.labels.size() < 2) throw SchemaError("labels must cover background plus at least one class");
  if (num_classes > 0 && static_cast<int>(a.labels.size()) != num_classes + 1)
    throw SchemaError("labels length " + std::to_string(a.labels.size()) + " != C+1 = " +
                      std::to_string(num_classes + 1));
  for (int v : a.labels)
    if (v != 0 && v != 1) throw SchemaError("labels entries must be 0 or 1");
  if (a.gt_classes().empty()) throw SchemaError("annotation '" + a.video_id + "' has no action class label");
  if (fixed_length > 0 && static_cast<int>(a.clicks.size()) != fixed_length)
    throw SchemaError("clicks length " + std::to_string(a.clicks.size()) + " != T = " +
                      std::to_string(fixed_length));
  for (int v : a.clicks)
    if (v != kUnknown && v != kBackground) throw SchemaError("stored clicks must be -1 or 1");
  const int C = a.num_classes();
  for (const auto& s : a.segments) {
    if (!(s.start_sec >= 0.0 && s.start_sec < s.end_sec)) throw SchemaError("segment with start >= end");
    if (s.class_id < 1 || s.class_id > C) throw SchemaError("segment class_id out of range");
  }
  for (const auto& c : a.action_clicks) {
    if (c.class_id < 1 || c.class_id > C) throw SchemaError("action click class_id out of range");
    if (c.frame < 0 || (!a.clicks.empty() && c.frame >= static_cast<int>(a.clicks.size())))
      throw SchemaError("action click frame out of range");
  }
}

inline VideoAnnotation annotation_from_json(const json& j) {
  VideoAnnotation a;
  a.video_id = detail::typed<std::string>(j, "video_id");
  a.labels = detail::typed<std::vector<int>>(j, "labels");
  a.clicks = detail::typed<std::vector<int>>(j, "clicks");
  if (j.contains("click_times_sec")) a.click_times_sec = detail::typed<std::vector<double>>(j, "click_times_sec");
  if (j.contains("duration_sec")) a.duration_sec = detail::typed<double>(j, "duration_sec");
  if (j.contains("segments")) {
    for (const auto& s : detail::field(j, "segments"))
      a.segments.push_back({detail::typed<double>(s, "start_sec"), detail::typed<double>(s, "end_sec"),
                            detail::typed<int>(s, "class_id")});
  }
  if (j.contains("action_clicks")) {
    for (const auto& c : detail::field(j, "action_clicks"))
      a.action_clicks.push_back({detail::typed<double>(c, "time_sec"), detail::typed<int>(c, "frame"),
                                 detail::typed<int>(c, "class_id")});
  }
  validate_annotation(a);
  return a;
}

inline json to_json(const DatasetManifest& m) {
  json vids = json::array();
  for (const auto& v : m.videos) {
    json e = {{"video_id", v.video_id},
              {"feature_path", v.feature_path},
              {"annotation_path", v.annotation_path},
              {"duration_sec", v.duration_sec}};
    if (!v.subset.empty()) e["subset"] = v.subset;
    vids.push_back(std::move(e));
  }
  return {{"class_names", m.class_names}, {"videos", vids}, {"T_fixed", m.T_fixed}};
}

inline DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.class_names = detail::typed<std::vector<std::string>>(j, "class_names");
  m.T_fixed = detail::typed<int>(j, "T_fixed");
  if (m.class_names.empty()) throw SchemaError("manifest has no classes");
  if (m.T_fixed < 2) throw SchemaError("manifest T_fixed must be >= 2");
  std::set<std::string> ids;
  for (const auto& v : detail::field(j, "videos")) {
    VideoEntry e;
    e.video_id = detail::typed<std::string>(v, "video_id");
    e.feature_path = detail::typed<std::string>(v, "feature_path");
    e.annotation_path = detail::typed<std::string>(v, "annotation_path");
    e.duration_sec = detail::typed<double>(v, "duration_sec");
    if (v.contains("subset")) e.subset = detail::typed<std::string>(v, "subset");
    if (!(e.duration_sec > 0.0)) throw SchemaError("video '" + e.video_id + "' has non-positive duration");
    if (!ids.insert(e.video_id).second) throw SchemaError("duplicate video_id '" + e.video_id + "'");
    m.videos.push_back(std::move(e));
  }
  return m;
}

/// Parses a manifest and checks that every referenced file exists.
inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  DatasetManifest m;
  try {
    m = manifest_from_json(json::parse(io::read_text(path)));
  } catch (const json::parse_error& e) {
    throw SchemaError("manifest is not valid JSON: " + std::string(e.what()));
  }
  const auto root = path.parent_path();
  for (const auto& v : m.videos) {
    for (const auto& rel : {v.feature_path, v.annotation_path})
      if (!std::filesystem::exists(root / rel))
        throw io::IoError("manifest references missing file " + (root / rel).string());
  }
  return m;
}

inline VideoAnnotation load_annotation(const std::filesystem::path& path) {
  try {
    return annotation_from_json(json::parse(io::read_text(path)));
  } catch (const json::parse_error& e) {
    throw SchemaError("annotation is not valid JSON: " + std::string(e.what()));
  }
}

/// One video ready for the network: features rescaled to T_fixed.
struct VideoSample {
  VideoEntry entry;
  FeatureSequence features;
  VideoAnnotation annotation;
};

inline std::vector<VideoSample> load_dataset(const std::filesystem::path& manifest_path,
                                             const std::string& subset = {}) {
  const DatasetManifest m = load_manifest(manifest_path);
  const auto root = manifest_path.parent_path();
  std::vector<VideoSample> out;
  for (const auto& v : m.videos) {
    if (!subset.empty() && v.subset != subset) continue;
    VideoSample s;
    s.entry = v;
    FeatureSequence raw = load_feature_file(root / v.feature_path, v.video_id);
    raw.fps_of_snippets = raw.length() / v.duration_sec;
    s.features = rescale_to_fixed_length(raw, m.T_fixed);
    s.annotation = load_annotation(root / v.annotation_path);
    validate_annotation(s.annotation, m.num_classes(), m.T_fixed);
    if (s.annotation.video_id != v.video_id)
      throw SchemaError("annotation video_id '" + s.annotation.video_id + "' does not match manifest '" +
                        v.video_id + "'");
    if (s.annotation.duration_sec <= 0.0) s.annotation.duration_sec = v.duration_sec;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace clicktal
