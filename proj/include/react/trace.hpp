#pragma once

// Line-delimited JSON trace files. Line 1 is a header object, every further
// line is one FrameTruth record.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "react/core.hpp"

namespace react {

using json = nlohmann::json;

inline json to_json(const BBox& b) { return {{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}}; }

inline json to_json(const TraceHeader& h) {
  return {{"version", h.version},
          {"class_names", h.class_names},
          {"frame_width", h.frame_width},
          {"frame_height", h.frame_height}};
}

inline json to_json(const FrameTruth& f) {
  json objs = json::array();
  for (const auto& o : f.objects)
    objs.push_back({{"identity", o.identity}, {"label", o.label}, {"bbox", to_json(o.bbox)}});
  return {{"frame_index", f.frame_index},
          {"camera_shift", {f.camera_shift.x, f.camera_shift.y}},
          {"objects", std::move(objs)}};
}

inline json to_json(const Detection& d) {
  return {{"label", d.label},
          {"bbox", to_json(d.bbox)},
          {"score", d.score},
          {"source", std::string(to_string(d.source))},
          {"frame_index", d.frame_index}};
}

namespace detail {

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "missing field " + key);
  return *it;
}

inline double number(const json& v, const char* key, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + "field " + key + " is not a number");
  return v.get<double>();
}

}  // namespace detail

inline BBox bbox_from_json(const json& j, const std::string& where = {}) {
  using detail::number;
  using detail::require;
  BBox b{number(require(j, "cx", where), "cx", where), number(require(j, "cy", where), "cy", where),
         number(require(j, "w", where), "w", where), number(require(j, "h", where), "h", where)};
  if (!b.valid()) throw ParseError(where + "bbox has non-positive size");
  return b;
}

inline Source source_from_string(const std::string& s) {
  if (s == "edge") return Source::Edge;
  if (s == "cloud") return Source::Cloud;
  throw ParseError("unknown detection source '" + s + "'");
}

inline Detection detection_from_json(const json& j, const std::string& where = {}) {
  using detail::require;
  Detection d;
  d.label = require(j, "label", where).get<ClassId>();
  d.bbox = bbox_from_json(require(j, "bbox", where), where);
  d.score = detail::number(require(j, "score", where), "score", where);
  d.source = source_from_string(require(j, "source", where).get<std::string>());
  d.frame_index = require(j, "frame_index", where).get<std::int64_t>();
  return d;
}

inline FrameTruth frame_from_json(const json& j, const std::string& where = {}) {
  using detail::require;
  FrameTruth f;
  const auto& idx = require(j, "frame_index", where);
  if (!idx.is_number_integer()) throw ParseError(where + "frame_index is not an integer");
  f.frame_index = idx.get<std::int64_t>();
  if (auto it = j.find("camera_shift"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) throw ParseError(where + "camera_shift must be [dx, dy]");
    f.camera_shift = {detail::number((*it)[0], "camera_shift", where),
                      detail::number((*it)[1], "camera_shift", where)};
  }
  const auto& objs = require(j, "objects", where);
  if (!objs.is_array()) throw ParseError(where + "objects is not an array");
  f.objects.reserve(objs.size());
  for (const auto& o : objs) {
    TruthObject t;
    t.identity = require(o, "identity", where).get<Identity>();
    t.label = require(o, "label", where).get<ClassId>();
    t.bbox = bbox_from_json(require(o, "bbox", where), where);
    f.objects.push_back(t);
  }
  return f;
}

inline TraceHeader header_from_json(const json& j, const std::string& where = {}) {
  using detail::require;
  TraceHeader h;
  h.version = require(j, "version", where).get<int>();
  if (h.version != 1) throw ParseError(where + "unsupported trace version " + std::to_string(h.version));
  h.class_names = require(j, "class_names", where).get<std::vector<std::string>>();
  h.frame_width = require(j, "frame_width", where).get<int>();
  h.frame_height = require(j, "frame_height", where).get<int>();
  return h;
}

// Throws ParseError ("line N: ...") on a malformed line and OrderingError when
// frame indices are not strictly increasing. An empty file yields an empty
// trace.
inline Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace " + path.string());
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + "invalid JSON");
    }
    try {
      if (!have_header) {
        trace.header = header_from_json(j, where);
        have_header = true;
        continue;
      }
      FrameTruth f = frame_from_json(j, where);
      if (!trace.frames.empty() && f.frame_index <= trace.frames.back().frame_index)
        throw OrderingError(where + "frame_index " + std::to_string(f.frame_index) +
                            " does not follow " + std::to_string(trace.frames.back().frame_index));
      trace.frames.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw ParseError(where + e.what());
    }
  }
  return trace;
}

inline void save_trace(const Trace& trace, const std::filesystem::path& path) {
  for (std::size_t i = 1; i < trace.frames.size(); ++i)
    if (trace.frames[i].frame_index <= trace.frames[i - 1].frame_index)
      throw ContractError("save_trace: frames out of order at position " + std::to_string(i));
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write trace " + path.string());
  out << to_json(trace.header).dump() << '\n';
  for (const auto& f : trace.frames) out << to_json(f).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace react
