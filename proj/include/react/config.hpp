#pragma once

// JSON configuration. Documents mirror the ScenarioConfig field names and are
// read strictly: an unknown or mistyped field is a ConfigError naming it.
// "network" and "server" take either a preset name or an inline object.

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "react/scenario.hpp"
#include "react/trace.hpp"

namespace react {

#ifdef REACT_CONFIG_DIR
inline const std::filesystem::path kDefaultPresetsPath = std::filesystem::path(REACT_CONFIG_DIR) / "presets.json";
#else
inline const std::filesystem::path kDefaultPresetsPath = "config/presets.json";
#endif

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace detail {

// Reads the fields of one JSON object and rejects any it did not consume.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(prefix_.empty() ? "config" : prefix_, "expected an object");
  }
  FieldReader(const FieldReader&) = delete;
  FieldReader& operator=(const FieldReader&) = delete;

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* find(const std::string& key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  void get(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void get(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(path(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        throw ConfigError(path(key), "expected a number or null");
      }
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(path(it.key()), "unknown field");
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> used_;
};

inline void read_into(const json& j, const std::string& prefix, SceneParams& p) {
  FieldReader r(j, prefix);
  r.get("frame_width", p.frame_width);
  r.get("frame_height", p.frame_height);
  r.get("n_frames", p.n_frames);
  r.get("n_objects_mean", p.n_objects_mean);
  r.get("object_lifetime_mean", p.object_lifetime_mean);
  r.get("object_lifetime_max", p.object_lifetime_max);
  r.get("speed_mean", p.speed_mean);
  r.get("speed_sigma", p.speed_sigma);
  r.get("jitter_sigma", p.jitter_sigma);
  r.get("size_min", p.size_min);
  r.get("size_max", p.size_max);
  r.get("n_classes", p.n_classes);
  r.get("camera_pan_sigma", p.camera_pan_sigma);
  r.get("spawn_rate", p.spawn_rate);
  r.get("same_class_max_iou", p.same_class_max_iou);
  r.finish();
}

inline void read_into(const json& j, const std::string& prefix, LatencyModel& m) {
  FieldReader r(j, prefix);
  std::string kind = m.kind == LatencyModel::Kind::Constant ? "constant" : "lognormal";
  r.get("kind", kind);
  if (kind == "constant") {
    m.kind = LatencyModel::Kind::Constant;
  } else if (kind == "lognormal") {
    m.kind = LatencyModel::Kind::LogNormal;
  } else {
    throw ConfigError(r.path("kind"), "expected \"constant\" or \"lognormal\"");
  }
  r.get("constant_ms", m.constant_ms);
  r.get("mu", m.mu);
  r.get("sigma", m.sigma);
  r.finish();
}

inline void read_into(const json& j, const std::string& prefix, DetectorProfile& p) {
  FieldReader r(j, prefix);
  r.get("miss_rate", p.miss_rate);
  r.get("miss_persistence", p.miss_persistence);
  r.get("fp_rate", p.fp_rate);
  r.get("label_confusion", p.label_confusion);
  r.get("loc_sigma", p.loc_sigma);
  r.get("score_mean", p.score_mean);
  r.get("score_sigma", p.score_sigma);
  r.get("fp_score_mean", p.fp_score_mean);
  r.get("fp_score_sigma", p.fp_score_sigma);
  r.get("fp_size_min", p.fp_size_min);
  r.get("fp_size_max", p.fp_size_max);
  if (const json* v = r.find("latency")) read_into(*v, r.path("latency"), p.latency);
  r.finish();
}

inline void read_into(const json& j, const std::string& prefix, LinkDelay& d) {
  FieldReader r(j, prefix);
  r.get("constant_ms", d.constant_ms);
  r.get("mu", d.mu);
  r.get("sigma", d.sigma);
  std::string path;
  r.get("trace_path", path);
  if (!path.empty()) d.trace_path = path;
  if (const json* v = r.find("trace")) {
    if (!v->is_array()) throw ConfigError(r.path("trace"), "expected an array of ms values");
    d.trace.clear();
    for (const auto& x : *v) {
      if (!x.is_number() || x.get<double>() < 0.0) throw ConfigError(r.path("trace"), "expected non-negative numbers");
      d.trace.push_back(x.get<double>());
    }
  }
  r.finish();
}

inline void read_into(const json& j, const std::string& prefix, NetworkProfile& n) {
  FieldReader r(j, prefix);
  std::string kind = "constant";
  if (n.kind == NetworkProfile::Kind::LogNormal) kind = "lognormal";
  if (n.kind == NetworkProfile::Kind::Trace) kind = "trace";
  r.get("kind", kind);
  if (kind == "constant") {
    n.kind = NetworkProfile::Kind::Constant;
  } else if (kind == "lognormal") {
    n.kind = NetworkProfile::Kind::LogNormal;
  } else if (kind == "trace") {
    n.kind = NetworkProfile::Kind::Trace;
  } else {
    throw ConfigError(r.path("kind"), "expected \"constant\", \"lognormal\" or \"trace\"");
  }
  if (const json* v = r.find("uplink")) read_into(*v, r.path("uplink"), n.uplink);
  if (const json* v = r.find("downlink")) read_into(*v, r.path("downlink"), n.downlink);
  r.get("bandwidth_mbps", n.bandwidth_mbps);
  r.get("payload_kb", n.payload_kb);
  r.get("downlink_payload_kb", n.downlink_payload_kb);
  r.finish();
}

inline void read_into(const json& j, const std::string& prefix, ServerConfig& s) {
  FieldReader r(j, prefix);
  r.get("num_workers", s.num_workers);
  r.get("batch_size", s.batch_size);
  r.get("max_delay_ms", s.max_delay_ms);
  r.get("base_ms", s.base_ms);
  r.get("per_item_ms", s.per_item_ms);
  r.finish();
}

inline void read_into(const json& j, const std::string& prefix, TrackerModel& t) {
  FieldReader r(j, prefix);
  r.get("drift_sigma", t.drift_sigma);
  r.get("match_iou", t.match_iou);
  r.finish();
}

}  // namespace detail

// Named network and server setups.
struct Presets {
  std::map<std::string, NetworkProfile> network;
  std::map<std::string, ServerConfig> server;

  const NetworkProfile& network_preset(const std::string& name, const std::string& field = "network") const {
    auto it = network.find(name);
    if (it == network.end()) throw ConfigError(field, "unknown network preset \"" + name + "\"");
    return it->second;
  }
  const ServerConfig& server_preset(const std::string& name, const std::string& field = "server") const {
    auto it = server.find(name);
    if (it == server.end()) throw ConfigError(field, "unknown server preset \"" + name + "\"");
    return it->second;
  }
};

inline Presets parse_presets(const json& j) {
  Presets p;
  detail::FieldReader r(j, "presets");
  if (const json* net = r.find("network")) {
    if (!net->is_object()) throw ConfigError("presets.network", "expected an object");
    for (auto it = net->begin(); it != net->end(); ++it)
      detail::read_into(it.value(), "presets.network." + it.key(), p.network[it.key()]);
  }
  if (const json* srv = r.find("server")) {
    if (!srv->is_object()) throw ConfigError("presets.server", "expected an object");
    for (auto it = srv->begin(); it != srv->end(); ++it)
      detail::read_into(it.value(), "presets.server." + it.key(), p.server[it.key()]);
  }
  r.finish();
  return p;
}

inline Presets load_presets(const std::filesystem::path& path = kDefaultPresetsPath) {
  return parse_presets(read_json_file(path));
}

inline NetworkProfile resolve_network(const json& j, const Presets& presets, const std::string& field = "network") {
  if (j.is_string()) return presets.network_preset(j.get<std::string>(), field);
  NetworkProfile n;
  detail::read_into(j, field, n);
  return n;
}

inline ServerConfig resolve_server(const json& j, const Presets& presets, const std::string& field = "server") {
  if (j.is_string()) return presets.server_preset(j.get<std::string>(), field);
  ServerConfig s;
  detail::read_into(j, field, s);
  return s;
}

// Fields absent from the document keep their defaults.
inline ScenarioConfig parse_config(const json& j, const Presets& presets) {
  ScenarioConfig c;
  detail::FieldReader r(j, "");
  if (const json* v = r.find("scene")) detail::read_into(*v, "scene", c.scene);
  if (const json* v = r.find("edge_profile")) detail::read_into(*v, "edge_profile", c.edge_profile);
  if (const json* v = r.find("cloud_profile")) detail::read_into(*v, "cloud_profile", c.cloud_profile);
  r.get("k", c.k);
  r.get("m", c.m);
  r.get("delta", c.delta);
  r.get("change_threshold", c.change_threshold);
  r.get("iou_threshold", c.iou_threshold);
  r.get("discard_threshold", c.discard_threshold);
  if (const json* v = r.find("network")) c.network = resolve_network(*v, presets);
  if (const json* v = r.find("server")) c.server = resolve_server(*v, presets);
  r.get("seed", c.seed);
  if (const json* v = r.find("tracker")) detail::read_into(*v, "tracker", c.tracker);
  r.get("fast_track_stride", c.fast_track_stride);
  r.get("per_frame_decay", c.per_frame_decay);
  r.get("frame_period_ms", c.frame_period_ms);
  r.finish();

  if (auto err = validate(c); !err.empty()) {
    const auto colon = err.find(':');
    throw ConfigError(err.substr(0, colon), colon == std::string::npos ? err : err.substr(colon + 2));
  }
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path, const Presets& presets) {
  return parse_config(read_json_file(path), presets);
}

inline json to_json(const LatencyModel& m) {
  if (m.kind == LatencyModel::Kind::Constant) return {{"kind", "constant"}, {"constant_ms", m.constant_ms}};
  return {{"kind", "lognormal"}, {"mu", m.mu}, {"sigma", m.sigma}};
}

inline json to_json(const ServerConfig& s) {
  return {{"num_workers", s.num_workers},
          {"batch_size", s.batch_size},
          {"max_delay_ms", s.max_delay_ms},
          {"base_ms", s.base_ms},
          {"per_item_ms", s.per_item_ms}};
}

}  // namespace react
