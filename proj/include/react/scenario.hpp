#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "react/netem.hpp"
#include "react/server.hpp"
#include "react/simworld.hpp"
#include "react/tracking.hpp"

namespace react {

// Everything one experiment run needs besides the trace itself.
struct ScenarioConfig {
  SceneParams scene;
  DetectorProfile edge_profile = default_edge_profile();
  DetectorProfile cloud_profile = default_cloud_profile();
  int k = 5;   // edge detection period, frames
  int m = 30;  // cloud detection period, frames
  double delta = 0.95;
  // Empty disables motion gating: detection runs on every period frame.
  std::optional<double> change_threshold;
  double iou_threshold = 0.5;
  double discard_threshold = 0.5;
  NetworkProfile network;
  ServerConfig server;
  std::uint64_t seed = 1;

  TrackerModel tracker;
  int fast_track_stride = 2;
  bool per_frame_decay = false;
  double frame_period_ms = 33.3;

  DecayRule decay_rule() const noexcept { return {delta, discard_threshold}; }
};

inline std::string validate(const ScenarioConfig& c) {
  if (auto e = validate(c.scene); !e.empty()) return "scene: " + e;
  if (auto e = validate(c.edge_profile); !e.empty()) return "edge_profile: " + e;
  if (auto e = validate(c.cloud_profile); !e.empty()) return "cloud_profile: " + e;
  if (auto e = validate(c.server); !e.empty()) return "server: " + e;
  if (c.k < 1) return "k: must be >= 1";
  if (c.m < 1) return "m: must be >= 1";
  if (c.delta < 0.0 || c.delta > 1.0) return "delta: must lie in [0,1]";
  if (c.change_threshold && *c.change_threshold < 0.0) return "change_threshold: must be >= 0";
  if (c.iou_threshold <= 0.0 || c.iou_threshold > 1.0) return "iou_threshold: must lie in (0,1]";
  if (c.discard_threshold <= 0.0 || c.discard_threshold >= 1.0) return "discard_threshold: must lie in (0,1)";
  if (c.tracker.drift_sigma < 0.0) return "tracker.drift_sigma: must be >= 0";
  if (c.tracker.match_iou <= 0.0 || c.tracker.match_iou > 1.0) return "tracker.match_iou: must lie in (0,1]";
  if (c.fast_track_stride < 1) return "fast_track_stride: must be >= 1";
  if (c.frame_period_ms <= 0.0) return "frame_period_ms: must be positive";
  if (c.network.bandwidth_mbps <= 0.0) return "network.bandwidth_mbps: must be positive";
  return {};
}

}  // namespace react
