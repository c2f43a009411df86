#pragma once

// Statistical stand-in for a visual tracker. A track bound to a ground-truth
// identity follows that identity's true motion plus Gaussian drift; unbound
// tracks only follow the camera. Confidence decays multiplicatively per step.

#include <optional>
#include <span>
#include <vector>

#include "react/core.hpp"
#include "react/geometry.hpp"
#include "react/random.hpp"

namespace react {

struct TrackerModel {
  double drift_sigma = 1.0;  // px of positional noise per tracked frame step
  double match_iou = 0.5;
};

struct DecayRule {
  double delta = 0.9;
  double discard_threshold = 0.5;
};

// Ground-truth identity with the largest IoU against `box`, if it reaches match_iou.
inline std::optional<Identity> bind_identity(const BBox& box, const FrameTruth& truth, const TrackerModel& model) {
  std::optional<Identity> best;
  double best_iou = 0.0;
  for (const auto& o : truth.objects) {
    const double v = iou(box, o.bbox);
    if (v >= model.match_iou && v > best_iou) {
      best_iou = v;
      best = o.identity;
    }
  }
  return best;
}

inline std::optional<Identity> bind_identity(const TrackedObject& obj, const FrameTruth& truth,
                                             const TrackerModel& model) {
  return bind_identity(obj.bbox(), truth, model);
}

inline bool center_inside(const BBox& b, const FrameSpec& bounds) noexcept {
  return b.cx >= 0.0 && b.cx <= bounds.width && b.cy >= 0.0 && b.cy <= bounds.height;
}

// Advances tracks from `prev` to `next`, which may be several frames apart.
// `background_shift` is the camera motion accumulated over the span, `decays`
// the number of decay multiplications to apply. Drift noise scales linearly
// with the span so that coarser steps cost localization accuracy.
inline std::vector<TrackedObject> propagate_span(std::span<const TrackedObject> objects, const FrameTruth& prev,
                                                 const FrameTruth& next, Vec2 background_shift, int decays,
                                                 const TrackerModel& model, const DecayRule& decay,
                                                 const FrameSpec& bounds, Rng& rng) {
  const auto span_frames = next.frame_index - prev.frame_index;
  const double sigma = model.drift_sigma * static_cast<double>(span_frames);
  std::vector<TrackedObject> out;
  out.reserve(objects.size());
  for (TrackedObject o : objects) {
    if (o.age_frames == 0) o.bound_identity = bind_identity(o, prev, model);

    Vec2 move = background_shift;
    if (o.bound_identity) {
      const TruthObject* a = prev.find(*o.bound_identity);
      const TruthObject* b = next.find(*o.bound_identity);
      if (a && b) {
        move = {b->bbox.cx - a->bbox.cx, b->bbox.cy - a->bbox.cy};
      } else {
        o.bound_identity.reset();  // target lost; fall back to camera motion
      }
    }
    // Both draws happen unconditionally to keep the stream aligned across tracks.
    const double nx = rng.normal(0.0, sigma);
    const double ny = rng.normal(0.0, sigma);
    o.detection.bbox.cx += move.x + nx;
    o.detection.bbox.cy += move.y + ny;

    for (int i = 0; i < decays; ++i) o.detection.score *= decay.delta;
    o.age_frames += span_frames;
    o.detection.frame_index = next.frame_index;

    if (o.detection.score < decay.discard_threshold) continue;
    if (!center_inside(o.bbox(), bounds)) continue;
    out.push_back(std::move(o));
  }
  return out;
}

// One main-tracker step between consecutive frames.
inline std::vector<TrackedObject> propagate_step(std::span<const TrackedObject> objects,
                                                 const FrameTruth& truth_prev, const FrameTruth& truth_next,
                                                 const TrackerModel& model, const DecayRule& decay,
                                                 const FrameSpec& bounds, Rng& rng) {
  if (truth_next.frame_index != truth_prev.frame_index + 1)
    throw ContractError("propagate_step: frames are not consecutive");
  return propagate_span(objects, truth_prev, truth_next, truth_next.camera_shift, 1, model, decay, bounds, rng);
}

struct FastTrackOptions {
  int stride = 2;               // track every stride-th buffered frame
  bool per_frame_decay = false;  // decay once per underlying frame instead of per step
};

// Brings detections made on truths.front() forward to truths.back() by running
// a separate tracker instance over the buffered frames with the given stride.
// Survivors are re-stamped with the final frame index.
inline std::vector<Detection> fast_track(std::span<const Detection> dets, std::span<const FrameTruth> truths,
                                         const TrackerModel& model, const DecayRule& decay,
                                         const FastTrackOptions& opts, const FrameSpec& bounds, Rng& rng) {
  if (truths.empty()) throw ContractError("fast_track: no buffered frames");
  if (opts.stride < 1) throw ContractError("fast_track: stride must be >= 1");
  const std::int64_t t0 = truths.front().frame_index;
  const std::int64_t t_now = truths.back().frame_index;
  if (t_now - t0 + 1 != static_cast<std::int64_t>(truths.size()))
    throw ContractError("fast_track: buffered frames are not contiguous");
  if (t_now == t0) return {dets.begin(), dets.end()};

  std::vector<TrackedObject> tracks;
  tracks.reserve(dets.size());
  for (const auto& d : dets) {
    TrackedObject o;
    o.detection = d;
    o.last_det_source = d.source;
    tracks.push_back(o);
  }

  std::int64_t t = t0;
  while (t < t_now && !tracks.empty()) {
    const std::int64_t next = std::min<std::int64_t>(t + opts.stride, t_now);
    Vec2 shift;
    for (std::int64_t f = t + 1; f <= next; ++f) {
      shift.x += truths[static_cast<std::size_t>(f - t0)].camera_shift.x;
      shift.y += truths[static_cast<std::size_t>(f - t0)].camera_shift.y;
    }
    const int decays = opts.per_frame_decay ? static_cast<int>(next - t) : 1;
    tracks = propagate_span(tracks, truths[static_cast<std::size_t>(t - t0)],
                            truths[static_cast<std::size_t>(next - t0)], shift, decays, model, decay, bounds, rng);
    t = next;
  }

  std::vector<Detection> out;
  out.reserve(tracks.size());
  for (auto& o : tracks) {
    o.detection.frame_index = t_now;
    out.push_back(o.detection);
  }
  return out;
}

}  // namespace react
