#pragma once

// Edge-cloud fusion: merges the current object list with one arrival of
// single-source detections.

#include <span>
#include <vector>

#include "react/assignment.hpp"
#include "react/core.hpp"
#include "react/geometry.hpp"

namespace react {

// Throws ContractError for an empty or mixed-source arrival.
inline Source detection_source(std::span<const Detection> new_dets) {
  if (new_dets.empty()) throw ContractError("detection_source: empty detection list");
  const Source s = new_dets.front().source;
  for (const auto& d : new_dets)
    if (d.source != s) throw ContractError("detection_source: mixed detection sources");
  return s;
}

// Drops objects last confirmed by `source`; a newer batch from that source supersedes them.
inline std::vector<TrackedObject> remove_old_detections(std::span<const TrackedObject> current, Source source) {
  std::vector<TrackedObject> kept;
  kept.reserve(current.size());
  for (const auto& o : current)
    if (o.last_det_source != source) kept.push_back(o);
  return kept;
}

// Thresholded IoU matrix between current objects (rows) and new detections (columns).
inline Matrix overlap_matrix(std::span<const TrackedObject> current, std::span<const Detection> new_dets,
                             double iou_threshold) {
  Matrix M(current.size(), new_dets.size());
  for (std::size_t i = 0; i < current.size(); ++i)
    for (std::size_t j = 0; j < new_dets.size(); ++j) {
      const double v = iou(current[i].bbox(), new_dets[j].bbox);
      M(i, j) = v >= iou_threshold ? v : 0.0;
    }
  return M;
}

inline TrackedObject fresh_track(const Detection& d, Source source, TrackIdSource& ids) {
  TrackedObject o;
  o.detection = d;
  o.track_id = ids.next();
  o.last_det_source = source;
  o.age_frames = 0;
  return o;
}

// Merge of a matched (current, new) pair. Cloud arrivals contribute the label,
// edge arrivals the box; the score is the new score after one decay step.
inline TrackedObject merge_pair(const TrackedObject& cur, const Detection& incoming, Source source, double delta) {
  TrackedObject o;
  o.detection.label = source == Source::Cloud ? incoming.label : cur.detection.label;
  o.detection.bbox = source == Source::Cloud ? cur.detection.bbox : incoming.bbox;
  o.detection.score = delta * incoming.score;
  o.detection.source = source;
  o.detection.frame_index = incoming.frame_index;
  o.track_id = cur.track_id;
  o.last_det_source = source;
  o.age_frames = 0;
  return o;
}

// Assembles the fused list from a chosen matching. `match_of_new[j]` is the
// current' row merged with new detection j, or -1. Ordering: merged objects
// (current' order), fresh objects (new order), retained objects (current' order).
inline std::vector<TrackedObject> assemble_fused(std::span<const TrackedObject> current_kept,
                                                 std::span<const Detection> new_dets,
                                                 std::span<const long> match_of_new, Source source, double delta,
                                                 TrackIdSource& ids) {
  std::vector<long> match_of_cur(current_kept.size(), -1);
  for (std::size_t j = 0; j < match_of_new.size(); ++j)
    if (match_of_new[j] >= 0) match_of_cur[static_cast<std::size_t>(match_of_new[j])] = static_cast<long>(j);

  std::vector<TrackedObject> out;
  out.reserve(current_kept.size() + new_dets.size());
  for (std::size_t i = 0; i < current_kept.size(); ++i)
    if (match_of_cur[i] >= 0)
      out.push_back(merge_pair(current_kept[i], new_dets[static_cast<std::size_t>(match_of_cur[i])], source, delta));
  for (std::size_t j = 0; j < new_dets.size(); ++j)
    if (match_of_new[j] < 0) out.push_back(fresh_track(new_dets[j], source, ids));
  for (std::size_t i = 0; i < current_kept.size(); ++i)
    if (match_of_cur[i] < 0) out.push_back(current_kept[i]);
  return out;
}

// Fuses one single-source arrival into the current list.
//
// Same-source objects are purged, the remainder is matched to the arrivals by
// maximum-weight assignment over IoU (entries below `iou_threshold` zeroed),
// positive pairs are merged, and every other arrival starts a fresh track.
// Current objects left unmatched are retained unchanged.
inline std::vector<TrackedObject> fuse(std::span<const TrackedObject> current, std::span<const Detection> new_dets,
                                       double iou_threshold, double delta, TrackIdSource& ids) {
  const Source source = detection_source(new_dets);
  const auto kept = remove_old_detections(current, source);
  const Matrix M = overlap_matrix(kept, new_dets, iou_threshold);
  const auto assignment = solve_assignment(M);

  std::vector<long> match_of_new(new_dets.size(), -1);
  for (const auto& [r, c] : assignment.pairs)
    if (M(r, c) != 0.0) match_of_new[c] = static_cast<long>(r);
  return assemble_fused(kept, new_dets, match_of_new, source, delta, ids);
}

}  // namespace react
