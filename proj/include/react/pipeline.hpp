#pragma once

// The edge manager loop, driven by a deterministic discrete-event clock.
//
// Frames arrive every frame_period_ms. On arrival the main tracker advances
// the current list, and gated frames are handed to the edge detector and/or
// sent to the cloud. Detector results come back as timed events and are fused
// into the current list; cloud results are first fast-tracked from the frame
// they were computed on to the frame current at arrival. The prediction for
// frame f is the current list at the moment frame f+1 arrives.

#include <limits>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "react/core.hpp"
#include "react/fusion.hpp"
#include "react/netem.hpp"
#include "react/random.hpp"
#include "react/scenario.hpp"
#include "react/simworld.hpp"
#include "react/tracking.hpp"
#include "react/trace.hpp"

namespace react {

enum class PipelineMode { EdgeOnly, CloudOnly, EdgeCloud, EveryFrameEdge };

inline std::string_view to_string(PipelineMode m) noexcept {
  switch (m) {
    case PipelineMode::EdgeOnly: return "edge-only";
    case PipelineMode::CloudOnly: return "cloud-only";
    case PipelineMode::EdgeCloud: return "edge-cloud";
    case PipelineMode::EveryFrameEdge: return "ef-edge-det";
  }
  return "?";
}

inline std::optional<PipelineMode> parse_mode(std::string_view s) noexcept {
  for (auto m : {PipelineMode::EdgeOnly, PipelineMode::CloudOnly, PipelineMode::EdgeCloud,
                 PipelineMode::EveryFrameEdge})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

struct PipelineEvent {
  // Declaration order is the tie-break order at equal due times.
  enum class Kind { FrameArrival = 0, EdgeDetectionDone = 1, CloudResponseArrival = 2 };

  Kind kind = Kind::FrameArrival;
  std::int64_t frame_index = 0;
  double due_time = 0.0;  // simulated ms
  std::vector<Detection> payload;
  std::uint64_t seq = 0;  // insertion order, last-resort tie-break
};

// Processing order is ascending (due_time, frame_index, kind, seq); this is
// the "comes after" comparator for a std::priority_queue.
struct EventAfter {
  bool operator()(const PipelineEvent& a, const PipelineEvent& b) const noexcept {
    if (a.due_time != b.due_time) return a.due_time > b.due_time;
    if (a.frame_index != b.frame_index) return a.frame_index > b.frame_index;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.seq > b.seq;
  }
};

inline std::string_view to_string(PipelineEvent::Kind k) noexcept {
  switch (k) {
    case PipelineEvent::Kind::FrameArrival: return "frame_arrival";
    case PipelineEvent::Kind::EdgeDetectionDone: return "edge_detection_done";
    case PipelineEvent::Kind::CloudResponseArrival: return "cloud_response_arrival";
  }
  return "?";
}

struct EventLogEntry {
  double time = 0.0;
  PipelineEvent::Kind kind = PipelineEvent::Kind::FrameArrival;
  std::int64_t frame_index = 0;     // frame the event refers to
  std::int64_t current_frame = 0;   // latest arrived frame when processed
  std::size_t n_detections = 0;     // payload size (after fast-track for cloud)
  std::size_t n_current = 0;        // current list size after processing
};

struct PipelineResult {
  std::vector<std::vector<TrackedObject>> predictions;  // per frame
  std::vector<EventLogEntry> events;
  std::vector<double> serving_ms;       // per cloud request
  std::size_t edge_requests = 0;
  std::size_t cloud_requests = 0;
  std::size_t cloud_responses = 0;      // responses that arrived before the trace ended
  std::size_t cloud_objects_fused = 0;  // cloud detections that survived fast-track
};

inline bool uses_edge(PipelineMode m) noexcept {
  return m == PipelineMode::EdgeOnly || m == PipelineMode::EdgeCloud;
}
inline bool uses_cloud(PipelineMode m) noexcept {
  return m == PipelineMode::CloudOnly || m == PipelineMode::EdgeCloud;
}

// Detector output for a frame is a pure function of (seed, source, frame).
// The model server derives cloud results the same way.
inline std::vector<Detection> edge_detections(const FrameTruth& truth, const ScenarioConfig& cfg,
                                              const FrameSpec& spec) {
  Rng rng(cfg.seed, "edge", static_cast<std::uint64_t>(truth.frame_index));
  return simulate_detections(truth, cfg.edge_profile, Source::Edge, spec, rng);
}

inline std::vector<Detection> cloud_detections(const FrameTruth& truth, const DetectorProfile& profile,
                                               std::uint64_t seed, const FrameSpec& spec) {
  Rng rng(seed, "cloud", static_cast<std::uint64_t>(truth.frame_index));
  return simulate_detections(truth, profile, Source::Cloud, spec, rng);
}

namespace detail {

// Fusion of one arrival; an empty arrival only retires same-source objects.
inline std::vector<TrackedObject> fuse_arrival(const std::vector<TrackedObject>& current,
                                               const std::vector<Detection>& dets, Source source,
                                               const ScenarioConfig& cfg, TrackIdSource& ids) {
  if (dets.empty()) return remove_old_detections(current, source);
  return fuse(current, dets, cfg.iou_threshold, cfg.delta, ids);
}

}  // namespace detail

inline PipelineResult run_pipeline(const Trace& trace, const ScenarioConfig& cfg, PipelineMode mode) {
  if (trace.frames.empty()) throw ContractError("run_pipeline: empty trace");
  if (auto err = validate(cfg); !err.empty()) throw ConfigError("config", err);
  for (std::size_t i = 0; i < trace.frames.size(); ++i)
    if (trace.frames[i].frame_index != trace.frames.front().frame_index + static_cast<std::int64_t>(i))
      throw ContractError("run_pipeline: trace frames must be contiguous");

  using Kind = PipelineEvent::Kind;
  const auto& frames = trace.frames;
  const std::int64_t base = frames.front().frame_index;
  const auto n = static_cast<std::int64_t>(frames.size());
  const FrameSpec spec = frame_spec(trace.header);
  const DecayRule decay = cfg.decay_rule();
  const FastTrackOptions ft{cfg.fast_track_stride, cfg.per_frame_decay};

  auto local = [&](std::int64_t frame) { return static_cast<std::size_t>(frame - base); };
  auto arrival_time = [&](std::int64_t i) { return static_cast<double>(i) * cfg.frame_period_ms; };

  PipelineResult result;
  result.predictions.resize(frames.size());

  std::priority_queue<PipelineEvent, std::vector<PipelineEvent>, EventAfter> queue;
  std::uint64_t seq = 0;
  auto push = [&](Kind kind, std::int64_t frame, double due, std::vector<Detection> payload = {}) {
    queue.push(PipelineEvent{kind, frame, due, std::move(payload), seq++});
  };
  // One extra arrival past the last frame closes the final prediction interval.
  for (std::int64_t i = 0; i <= n; ++i) push(Kind::FrameArrival, base + i, arrival_time(i));

  NetworkEmulator network(cfg.network);
  Rng net_rng(cfg.seed, "network");
  TrackIdSource ids;
  std::vector<TrackedObject> current;
  std::int64_t cur = base - 1;

  auto log = [&](const PipelineEvent& ev, std::size_t n_dets) {
    result.events.push_back({ev.due_time, ev.kind, ev.frame_index, cur, n_dets, current.size()});
  };

  while (!queue.empty()) {
    PipelineEvent ev = queue.top();
    queue.pop();

    switch (ev.kind) {
      case Kind::FrameArrival: {
        const std::int64_t f = ev.frame_index;
        if (f > base) result.predictions[local(f - 1)] = current;
        if (f == base + n) {
          log(ev, 0);
          while (!queue.empty()) queue.pop();  // late responses are dropped
          break;
        }
        const FrameTruth& truth = frames[local(f)];
        double motion = std::numeric_limits<double>::infinity();
        if (f > base) motion = motion_score(frames[local(f - 1)], truth);
        cur = f;

        if (mode == PipelineMode::EveryFrameEdge) {
          current.clear();
          for (const auto& d : edge_detections(truth, cfg, spec)) current.push_back(fresh_track(d, Source::Edge, ids));
          log(ev, current.size());
          break;
        }

        if (f > base) {
          Rng rng(cfg.seed, "tracker", static_cast<std::uint64_t>(f));
          current = propagate_step(current, frames[local(f - 1)], truth, cfg.tracker, decay, spec, rng);
        }
        const double threshold = cfg.change_threshold.value_or(-std::numeric_limits<double>::infinity());
        if (uses_edge(mode) && gate(f, cfg.k, motion, threshold)) {
          Rng lat(cfg.seed, "edge-latency", static_cast<std::uint64_t>(f));
          push(Kind::EdgeDetectionDone, f, ev.due_time + cfg.edge_profile.latency.sample(lat),
               edge_detections(truth, cfg, spec));
          ++result.edge_requests;
        }
        if (uses_cloud(mode) && gate(f, cfg.m, motion, threshold)) {
          Rng lat(cfg.seed, "cloud-latency", static_cast<std::uint64_t>(f));
          const double serving = network.serving_time(cfg.cloud_profile.latency.sample(lat), net_rng);
          result.serving_ms.push_back(serving);
          push(Kind::CloudResponseArrival, f, ev.due_time + serving,
               cloud_detections(truth, cfg.cloud_profile, cfg.seed, spec));
          ++result.cloud_requests;
        }
        log(ev, 0);
        break;
      }
      case Kind::EdgeDetectionDone: {
        current = detail::fuse_arrival(current, ev.payload, Source::Edge, cfg, ids);
        log(ev, ev.payload.size());
        break;
      }
      case Kind::CloudResponseArrival: {
        ++result.cloud_responses;
        const std::span<const FrameTruth> buffered(frames.data() + local(ev.frame_index),
                                                   static_cast<std::size_t>(cur - ev.frame_index + 1));
        Rng rng(cfg.seed, "fast-track", static_cast<std::uint64_t>(ev.frame_index));
        const auto caught_up = fast_track(ev.payload, buffered, cfg.tracker, decay, ft, spec, rng);
        result.cloud_objects_fused += caught_up.size();
        current = detail::fuse_arrival(current, caught_up, Source::Cloud, cfg, ids);
        log(ev, caught_up.size());
        break;
      }
    }
  }
  return result;
}

inline std::vector<std::vector<Detection>> prediction_detections(const PipelineResult& r) {
  std::vector<std::vector<Detection>> out(r.predictions.size());
  for (std::size_t f = 0; f < r.predictions.size(); ++f)
    for (const auto& o : r.predictions[f]) out[f].push_back(o.detection);
  return out;
}

inline json to_json(const EventLogEntry& e) {
  return {{"time", e.time},
          {"kind", std::string(to_string(e.kind))},
          {"frame", e.frame_index},
          {"current_frame", e.current_frame},
          {"counts", {{"detections", e.n_detections}, {"current", e.n_current}}}};
}

inline json to_json(const TrackedObject& o) {
  return {{"track_id", o.track_id},
          {"label", o.detection.label},
          {"bbox", to_json(o.detection.bbox)},
          {"score", o.detection.score},
          {"last_det_source", std::string(to_string(o.last_det_source))},
          {"age_frames", o.age_frames}};
}

}  // namespace react
