#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace react {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input (trace lines, config documents, wire messages).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Frames that are not strictly increasing in frame_index.
class OrderingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// An invalid or unknown configuration field. `field()` names the offender.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// ---------------------------------------------------------------------------
// Geometry primitives
// ---------------------------------------------------------------------------

// Axis-aligned box stored by center and size. Origin is top-left, y grows
// downward. Corner coordinates are derived on demand.
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const noexcept { return cx - 0.5 * w; }
  double right() const noexcept { return cx + 0.5 * w; }
  double top() const noexcept { return cy - 0.5 * h; }
  double bottom() const noexcept { return cy + 0.5 * h; }
  double area() const noexcept { return w * h; }
  bool valid() const noexcept { return w > 0.0 && h > 0.0; }

  static BBox from_corners(double x0, double y0, double x1, double y1) noexcept {
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

// ---------------------------------------------------------------------------
// Detections and tracks
// ---------------------------------------------------------------------------

using ClassId = int;
using TrackId = std::uint64_t;
using Identity = std::uint64_t;

enum class Source { Edge, Cloud };

inline std::string_view to_string(Source s) noexcept {
  return s == Source::Edge ? "edge" : "cloud";
}

// One detected object: the <label, box, confidence> tuple plus provenance.
struct Detection {
  ClassId label = 0;
  BBox bbox;
  double score = 0.0;
  Source source = Source::Edge;
  std::int64_t frame_index = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// An entry in the pipeline's current object list.
struct TrackedObject {
  Detection detection;
  TrackId track_id = 0;
  Source last_det_source = Source::Edge;
  std::int64_t age_frames = 0;
  // Ground-truth identity the simulated tracker follows; empty for tracks on
  // background or when the target was lost.
  std::optional<Identity> bound_identity;

  double score() const noexcept { return detection.score; }
  const BBox& bbox() const noexcept { return detection.bbox; }

  friend bool operator==(const TrackedObject&, const TrackedObject&) = default;
};

// Hands out fresh track ids in increasing order.
class TrackIdSource {
 public:
  explicit TrackIdSource(TrackId first = 1) : next_(first) {}
  TrackId next() noexcept { return next_++; }
  TrackId peek() const noexcept { return next_; }

 private:
  TrackId next_;
};

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

struct TruthObject {
  Identity identity = 0;
  ClassId label = 0;
  BBox bbox;

  friend bool operator==(const TruthObject&, const TruthObject&) = default;
};

struct FrameTruth {
  std::int64_t frame_index = 0;
  std::vector<TruthObject> objects;
  Vec2 camera_shift;

  const TruthObject* find(Identity id) const noexcept {
    for (const auto& o : objects)
      if (o.identity == id) return &o;
    return nullptr;
  }

  friend bool operator==(const FrameTruth&, const FrameTruth&) = default;
};

struct TraceHeader {
  int version = 1;
  std::vector<std::string> class_names;
  int frame_width = 0;
  int frame_height = 0;

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct Trace {
  TraceHeader header;
  std::vector<FrameTruth> frames;

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Frame dimensions and label space a detector model draws from.
struct FrameSpec {
  double width = 960.0;
  double height = 540.0;
  int n_classes = 1;
};

inline FrameSpec frame_spec(const TraceHeader& h) {
  return {static_cast<double>(h.frame_width), static_cast<double>(h.frame_height),
          static_cast<int>(h.class_names.size())};
}

inline Detection as_detection(const TruthObject& o, std::int64_t frame, double score = 1.0,
                              Source src = Source::Cloud) {
  return {o.label, o.bbox, score, src, frame};
}

// Returns an empty string when the trace satisfies every type invariant,
// otherwise a description of the first violation.
inline std::string validate(const Trace& trace) {
  const double W = trace.header.frame_width;
  const double H = trace.header.frame_height;
  const auto n_classes = static_cast<int>(trace.header.class_names.size());
  std::vector<std::pair<Identity, ClassId>> labels;  // sorted by identity
  std::int64_t prev = -1;
  for (const auto& f : trace.frames) {
    const std::string at = "frame " + std::to_string(f.frame_index) + ": ";
    if (f.frame_index <= prev) return at + "frame_index not increasing";
    prev = f.frame_index;
    for (std::size_t i = 0; i < f.objects.size(); ++i) {
      const auto& o = f.objects[i];
      if (!o.bbox.valid()) return at + "non-positive box size";
      if (o.label < 0 || (n_classes > 0 && o.label >= n_classes)) return at + "label out of range";
      constexpr double eps = 1e-9;
      if (W > 0 && (o.bbox.left() < -eps || o.bbox.right() > W + eps)) return at + "box outside frame";
      if (H > 0 && (o.bbox.top() < -eps || o.bbox.bottom() > H + eps)) return at + "box outside frame";
      for (std::size_t j = i + 1; j < f.objects.size(); ++j)
        if (f.objects[j].identity == o.identity) return at + "duplicate identity";
      auto it = std::lower_bound(labels.begin(), labels.end(), o.identity,
                                 [](const auto& p, Identity id) { return p.first < id; });
      if (it != labels.end() && it->first == o.identity) {
        if (it->second != o.label) return at + "identity changed label";
      } else {
        labels.insert(it, {o.identity, o.label});
      }
    }
  }
  return {};
}

}  // namespace react
