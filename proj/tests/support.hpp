#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "react/react.hpp"

namespace testing_support {

using namespace react;

inline BBox box(double cx, double cy, double w, double h) { return BBox{cx, cy, w, h}; }

inline Detection det(ClassId label, BBox b, double score, Source src = Source::Edge, std::int64_t frame = 0) {
  return Detection{label, b, score, src, frame};
}

inline TrackedObject tracked(ClassId label, BBox b, double score, Source last, TrackId id) {
  TrackedObject o;
  o.detection = det(label, b, score, last);
  o.track_id = id;
  o.last_det_source = last;
  return o;
}

inline TruthObject gt(Identity id, ClassId label, BBox b) { return TruthObject{id, label, b}; }

// A fresh path under the system temp dir, removed when the object dies.
class TempFile {
 public:
  explicit TempFile(const std::string& name) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("react_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + name);
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

  void write(const std::string& content) const { std::ofstream(path_) << content; }
  std::string read() const {
    std::ifstream in(path_, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

 private:
  std::filesystem::path path_;
};

inline Trace static_trace(std::vector<TruthObject> objects, int n_frames, int w = 960, int h = 540, int n_classes = 4) {
  Trace t;
  t.header.class_names = default_class_names(n_classes);
  t.header.frame_width = w;
  t.header.frame_height = h;
  for (int f = 0; f < n_frames; ++f) t.frames.push_back(FrameTruth{f, objects, {}});
  return t;
}

}  // namespace testing_support
