#pragma once

// Synthetic scenes, the change detector, and statistical detector models.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "react/core.hpp"
#include "react/geometry.hpp"
#include "react/random.hpp"

namespace react {

struct SceneParams {
  int frame_width = 960;
  int frame_height = 540;
  int n_frames = 900;
  double n_objects_mean = 8.0;         // expected objects at frame 0
  double object_lifetime_mean = 150.0;  // frames, geometric
  int object_lifetime_max = 0;          // 0 = uncapped
  double speed_mean = 2.0;              // px/frame
  double speed_sigma = 1.0;
  double jitter_sigma = 0.3;  // per-frame positional noise on top of constant velocity
  double size_min = 30.0;
  double size_max = 120.0;
  int n_classes = 4;
  double camera_pan_sigma = 0.5;  // px/frame, random-walk increment
  double spawn_rate = 8.0 / 150.0;  // objects per frame
  // Same-class objects never overlap beyond this IoU; they bounce off each
  // other instead, so a perfect detector is never hurt by its own NMS.
  double same_class_max_iou = 0.3;
};

inline std::string validate(const SceneParams& p) {
  if (p.frame_width <= 0 || p.frame_height <= 0) return "frame size must be positive";
  if (p.n_frames < 0) return "n_frames must be non-negative";
  if (p.n_objects_mean < 0 || p.spawn_rate < 0) return "object rates must be non-negative";
  if (p.object_lifetime_mean < 1.0) return "object_lifetime_mean must be >= 1";
  if (p.object_lifetime_max < 0) return "object_lifetime_max must be >= 0";
  if (p.size_min <= 0 || p.size_min > p.size_max) return "size range must satisfy 0 < min <= max";
  if (p.size_max > p.frame_width || p.size_max > p.frame_height) return "size_max exceeds the frame";
  if (p.n_classes < 1) return "n_classes must be >= 1";
  if (p.speed_sigma < 0 || p.jitter_sigma < 0 || p.camera_pan_sigma < 0) return "sigmas must be non-negative";
  return {};
}

inline std::vector<std::string> default_class_names(int n) {
  static const char* kNames[] = {"car", "person", "truck", "bus", "bicycle", "motorcycle", "van", "tricycle"};
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i)
    names.push_back(i < 8 ? std::string(kNames[i]) : "class" + std::to_string(i));
  return names;
}

struct LatencyModel {
  enum class Kind { Constant, LogNormal };
  Kind kind = Kind::Constant;
  double constant_ms = 0.0;
  double mu = 0.0;     // log-space, for LogNormal
  double sigma = 0.0;

  double sample(Rng& rng) const {
    return kind == Kind::Constant ? constant_ms : rng.lognormal(mu, sigma);
  }
};

struct DetectorProfile {
  double miss_rate = 0.0;
  // Fraction of miss decisions driven by a fixed per-object difficulty rather
  // than an independent coin flip. Difficulty is shared by all detectors, so a
  // weaker detector misses a superset of what a stronger one misses.
  double miss_persistence = 0.0;
  double fp_rate = 0.0;  // expected false positives per frame
  double label_confusion = 0.0;
  double loc_sigma = 0.0;  // px, on the center and (relative to size) on log-size
  double score_mean = 1.0;
  double score_sigma = 0.0;
  double fp_score_mean = 0.5;
  double fp_score_sigma = 0.1;
  double fp_size_min = 30.0;
  double fp_size_max = 120.0;
  LatencyModel latency;
};

inline std::string validate(const DetectorProfile& p) {
  auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!prob(p.miss_rate) || !prob(p.miss_persistence) || !prob(p.label_confusion))
    return "probabilities must lie in [0,1]";
  if (p.fp_rate < 0) return "fp_rate must be non-negative";
  if (p.loc_sigma < 0 || p.score_sigma < 0 || p.fp_score_sigma < 0) return "sigmas must be non-negative";
  if (p.fp_size_min <= 0 || p.fp_size_min > p.fp_size_max) return "fp size range invalid";
  if (p.latency.kind == LatencyModel::Kind::Constant && p.latency.constant_ms < 0) return "latency must be >= 0";
  return {};
}

// Artifact defaults: the edge model misses more, confuses labels more and
// localizes worse than the cloud model.
inline DetectorProfile default_edge_profile() {
  DetectorProfile p;
  p.miss_rate = 0.40;
  p.miss_persistence = 0.7;
  p.fp_rate = 0.5;
  p.label_confusion = 0.15;
  p.loc_sigma = 3.0;
  p.score_mean = 0.75;
  p.score_sigma = 0.1;
  p.fp_score_mean = 0.55;
  p.fp_score_sigma = 0.1;
  p.latency = {LatencyModel::Kind::Constant, 38.0, 0.0, 0.0};
  return p;
}

inline DetectorProfile default_cloud_profile() {
  DetectorProfile p;
  p.miss_rate = 0.10;
  p.miss_persistence = 0.7;
  p.fp_rate = 0.2;
  p.label_confusion = 0.03;
  p.loc_sigma = 1.0;
  p.score_mean = 0.85;
  p.score_sigma = 0.08;
  p.fp_score_mean = 0.55;
  p.fp_score_sigma = 0.1;
  p.latency = {LatencyModel::Kind::Constant, 150.0, 0.0, 0.0};
  return p;
}

inline DetectorProfile perfect_profile(double latency_ms = 0.0) {
  DetectorProfile p;
  p.latency = {LatencyModel::Kind::Constant, latency_ms, 0.0, 0.0};
  return p;
}

namespace detail {

struct LiveObject {
  TruthObject truth;
  Vec2 velocity;
  int remaining = 0;
};

inline double reflect(double c, double lo, double hi, double& v) {
  if (c < lo) {
    c = 2.0 * lo - c;
    v = -v;
  }
  if (c > hi) {
    c = 2.0 * hi - c;
    v = -v;
  }
  return std::clamp(c, lo, hi);
}

}  // namespace detail

// Objects spawn as a Poisson process, live for geometric lifetimes and move
// at constant velocity with jitter, bouncing off the frame border. A global
// camera pan (random walk) moves every object. Deterministic for a seed.
inline Trace generate_scene(const SceneParams& p, std::uint64_t seed) {
  if (auto err = validate(p); !err.empty()) throw ConfigError("scene", err);
  Rng rng(seed, "scene");
  const double W = p.frame_width, H = p.frame_height;
  const double die_p = 1.0 / p.object_lifetime_mean;
  Identity next_id = 1;
  std::vector<detail::LiveObject> live;

  auto crowded = [&](const TruthObject& t, std::size_t skip) {
    for (std::size_t i = 0; i < live.size(); ++i)
      if (i != skip && live[i].truth.label == t.label && iou(live[i].truth.bbox, t.bbox) > p.same_class_max_iou)
        return true;
    return false;
  };

  auto spawn = [&] {
    detail::LiveObject o;
    o.truth.identity = next_id++;
    o.truth.label = rng.uniform_int(0, p.n_classes - 1);
    o.truth.bbox.w = rng.uniform(p.size_min, p.size_max);
    o.truth.bbox.h = rng.uniform(p.size_min, p.size_max);
    // A few placement attempts; a spawn that cannot find room is dropped.
    bool placed = false;
    for (int attempt = 0; attempt < 16 && !placed; ++attempt) {
      o.truth.bbox.cx = rng.uniform(0.5 * o.truth.bbox.w, W - 0.5 * o.truth.bbox.w);
      o.truth.bbox.cy = rng.uniform(0.5 * o.truth.bbox.h, H - 0.5 * o.truth.bbox.h);
      placed = !crowded(o.truth, live.size());
    }
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double speed = std::max(0.0, rng.normal(p.speed_mean, p.speed_sigma));
    o.velocity = {speed * std::cos(angle), speed * std::sin(angle)};
    o.remaining = rng.geometric(die_p);
    if (p.object_lifetime_max > 0) o.remaining = std::min(o.remaining, p.object_lifetime_max);
    if (placed) live.push_back(o);
  };

  Trace trace;
  trace.header.class_names = default_class_names(p.n_classes);
  trace.header.frame_width = p.frame_width;
  trace.header.frame_height = p.frame_height;
  trace.frames.reserve(static_cast<std::size_t>(p.n_frames));

  for (int f = 0; f < p.n_frames; ++f) {
    FrameTruth frame;
    frame.frame_index = f;
    if (f == 0) {
      const int n0 = rng.poisson(p.n_objects_mean);
      for (int i = 0; i < n0; ++i) spawn();
    } else {
      frame.camera_shift = {rng.normal(0.0, p.camera_pan_sigma), rng.normal(0.0, p.camera_pan_sigma)};
      std::erase_if(live, [](detail::LiveObject& o) { return --o.remaining <= 0; });
      std::vector<detail::LiveObject> before = live;
      for (auto& o : live) {
        auto& b = o.truth.bbox;
        const double jx = rng.normal(0.0, p.jitter_sigma);
        const double jy = rng.normal(0.0, p.jitter_sigma);
        b.cx = detail::reflect(b.cx + o.velocity.x + jx + frame.camera_shift.x, 0.5 * b.w, W - 0.5 * b.w,
                               o.velocity.x);
        b.cy = detail::reflect(b.cy + o.velocity.y + jy + frame.camera_shift.y, 0.5 * b.h, H - 0.5 * b.h,
                               o.velocity.y);
      }
      // Same-class collisions: both objects stay put and reverse. Repeats until
      // stable; restoring everyone reproduces the previous, valid layout.
      for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < live.size(); ++i)
          for (std::size_t j = i + 1; j < live.size(); ++j) {
            if (live[i].truth.label != live[j].truth.label) continue;
            if (iou(live[i].truth.bbox, live[j].truth.bbox) <= p.same_class_max_iou) continue;
            for (std::size_t k : {i, j}) {
              if (live[k].truth.bbox != before[k].truth.bbox) {
                live[k].truth.bbox = before[k].truth.bbox;
                live[k].velocity = {-before[k].velocity.x, -before[k].velocity.y};
                changed = true;
              }
            }
          }
      }
      const int born = rng.poisson(p.spawn_rate);
      for (int i = 0; i < born; ++i) spawn();
    }
    frame.objects.reserve(live.size());
    for (const auto& o : live) frame.objects.push_back(o.truth);
    trace.frames.push_back(std::move(frame));
  }
  return trace;
}

// Scalar scene-change magnitude between consecutive frames: mean displacement
// of identities present in both frames plus the camera shift magnitude.
inline double motion_score(const FrameTruth& prev, const FrameTruth& next) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& o : next.objects) {
    if (const TruthObject* a = prev.find(o.identity)) {
      total += std::hypot(o.bbox.cx - a->bbox.cx, o.bbox.cy - a->bbox.cy);
      ++n;
    }
  }
  const double mean = n ? total / static_cast<double>(n) : 0.0;
  return mean + std::hypot(next.camera_shift.x, next.camera_shift.y);
}

// Detection trigger: on-period frames whose motion strictly exceeds the threshold.
inline bool gate(std::int64_t frame_index, std::int64_t period, double motion, double change_threshold) {
  if (period < 1) throw ContractError("gate: period must be >= 1");
  return frame_index % period == 0 && motion > change_threshold;
}

// Per-object difficulty in [0,1), fixed for the object's life.
inline double object_difficulty(Identity id) noexcept {
  return static_cast<double>(splitmix64(id ^ 0xd1b54a32d192ed03ULL) >> 11) * 0x1.0p-53;
}

inline double clamp_score(double s) noexcept { return std::clamp(s, 0.0, 1.0); }

// Emulates a detector on one frame of ground truth, followed by NMS at 0.5.
inline std::vector<Detection> simulate_detections(const FrameTruth& truth, const DetectorProfile& profile,
                                                  Source source, const FrameSpec& spec, Rng& rng) {
  std::vector<Detection> dets;
  dets.reserve(truth.objects.size() + 4);
  for (const auto& o : truth.objects) {
    const bool persistent = rng.bernoulli(profile.miss_persistence);
    const bool coin = rng.bernoulli(profile.miss_rate);
    const bool missed = persistent ? object_difficulty(o.identity) < profile.miss_rate : coin;
    if (missed) continue;

    Detection d;
    d.source = source;
    d.frame_index = truth.frame_index;
    d.label = o.label;
    if (spec.n_classes > 1 && rng.bernoulli(profile.label_confusion)) {
      const int other = rng.uniform_int(0, spec.n_classes - 2);
      d.label = other >= o.label ? other + 1 : other;
    }
    d.bbox = o.bbox;
    if (profile.loc_sigma > 0.0) {
      d.bbox.cx += rng.normal(0.0, profile.loc_sigma);
      d.bbox.cy += rng.normal(0.0, profile.loc_sigma);
      d.bbox.w *= std::exp(rng.normal(0.0, profile.loc_sigma / o.bbox.w));
      d.bbox.h *= std::exp(rng.normal(0.0, profile.loc_sigma / o.bbox.h));
    }
    d.score = clamp_score(rng.normal(profile.score_mean, profile.score_sigma));
    dets.push_back(d);
  }

  const int n_fp = rng.poisson(profile.fp_rate);
  for (int i = 0; i < n_fp; ++i) {
    Detection d;
    d.source = source;
    d.frame_index = truth.frame_index;
    d.label = rng.uniform_int(0, std::max(1, spec.n_classes) - 1);
    d.bbox.w = rng.uniform(profile.fp_size_min, profile.fp_size_max);
    d.bbox.h = rng.uniform(profile.fp_size_min, profile.fp_size_max);
    d.bbox.cx = rng.uniform(0.0, spec.width);
    d.bbox.cy = rng.uniform(0.0, spec.height);
    d.score = clamp_score(rng.normal(profile.fp_score_mean, profile.fp_score_sigma));
    dets.push_back(d);
  }
  return nms(dets, 0.5);
}

}  // namespace react
