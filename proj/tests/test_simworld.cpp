#include "support.hpp"

using namespace react;
using namespace testing_support;

TEST(Scene, EmptyWorld) {
  SceneParams p;
  p.n_frames = 50;
  p.spawn_rate = 0.0;
  p.n_objects_mean = 0.0;
  const Trace t = generate_scene(p, 3);
  ASSERT_EQ(t.frames.size(), 50u);
  for (const auto& f : t.frames) EXPECT_TRUE(f.objects.empty());
}

TEST(Scene, SeedDeterministic) {
  SceneParams p;
  p.n_frames = 200;
  const Trace a = generate_scene(p, 42), b = generate_scene(p, 42), c = generate_scene(p, 43);
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_NE(a.frames, c.frames);
}

TEST(Scene, MeanObjectCountNearConfigured) {
  SceneParams p;
  p.n_frames = 300;
  double total = 0.0;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    const Trace t = generate_scene(p, static_cast<std::uint64_t>(s));
    double count = 0.0;
    for (const auto& f : t.frames) count += static_cast<double>(f.objects.size());
    total += count / static_cast<double>(t.frames.size());
  }
  EXPECT_NEAR(total / seeds, p.n_objects_mean, 0.15 * p.n_objects_mean);
}

TEST(Scene, OutputPassesValidation) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    SceneParams p;
    p.n_frames = 300;
    EXPECT_EQ(validate(generate_scene(p, s)), "") << "seed " << s;
  }
}

TEST(Scene, LifetimeCapHolds) {
  SceneParams p;
  p.n_frames = 400;
  p.object_lifetime_max = 30;
  const Trace t = generate_scene(p, 5);
  std::map<Identity, int> seen;
  for (const auto& f : t.frames)
    for (const auto& o : f.objects) seen[o.identity]++;
  for (const auto& [id, n] : seen) EXPECT_LE(n, 30) << "identity " << id;
}

TEST(Scene, RejectsInvalidParams) {
  SceneParams p;
  p.size_min = 200;
  p.size_max = 100;
  EXPECT_NE(validate(p), "");
  EXPECT_THROW(generate_scene(p, 1), ConfigError);
}

TEST(MotionScore, Examples) {
  const FrameTruth a{0, {gt(1, 0, box(10, 10, 5, 5)), gt(2, 0, box(50, 50, 5, 5))}, {}};
  EXPECT_EQ(motion_score(a, FrameTruth{1, a.objects, {}}), 0.0);

  const FrameTruth one_a{0, {gt(1, 0, box(10, 10, 5, 5))}, {}};
  const FrameTruth one_b{1, {gt(1, 0, box(13, 14, 5, 5))}, {}};
  EXPECT_DOUBLE_EQ(motion_score(one_a, one_b), 5.0);

  const FrameTruth b{1, {gt(1, 0, box(12, 10, 5, 5)), gt(2, 0, box(54, 50, 5, 5))}, {1, 0}};
  EXPECT_DOUBLE_EQ(motion_score(a, b), 4.0);
}

TEST(Gate, Examples) {
  EXPECT_TRUE(gate(10, 5, 3.0, 1.0));
  EXPECT_FALSE(gate(11, 5, 3.0, 1.0));
  EXPECT_FALSE(gate(10, 5, 0.5, 1.0));
  for (double t : {0.0, 0.1, 5.0}) EXPECT_FALSE(gate(10, 5, 0.0, t));
}

TEST(SimulateDetections, PerfectDetectorReproducesTruth) {
  SceneParams p;
  p.n_frames = 50;
  const Trace t = generate_scene(p, 6);
  const FrameSpec spec = frame_spec(t.header);
  for (const auto& f : t.frames) {
    Rng rng(1, "d", static_cast<std::uint64_t>(f.frame_index));
    auto dets = simulate_detections(f, perfect_profile(), Source::Cloud, spec, rng);
    ASSERT_EQ(dets.size(), f.objects.size());
    for (const auto& o : f.objects) {
      const bool found = std::any_of(dets.begin(), dets.end(),
                                     [&](const Detection& d) { return d.bbox == o.bbox && d.label == o.label; });
      EXPECT_TRUE(found);
    }
  }
}

TEST(SimulateDetections, BlindDetectorOnlyFalsePositives) {
  DetectorProfile prof = default_cloud_profile();
  prof.miss_rate = 1.0;
  prof.fp_rate = 2.0;
  const FrameTruth f{0, {gt(1, 0, box(100, 100, 40, 40)), gt(2, 1, box(300, 200, 60, 60))}, {}};
  std::size_t total = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng(2, "blind", i);
    for (const auto& d : simulate_detections(f, prof, Source::Edge, {960, 540, 4}, rng)) {
      ++total;
      // A false positive is drawn independently of the truth boxes.
      EXPECT_FALSE(d.bbox == f.objects[0].bbox || d.bbox == f.objects[1].bbox);
    }
  }
  EXPECT_GT(total, 200u);
}

TEST(SimulateDetections, DetectionRateMatchesMissRate) {
  DetectorProfile prof;
  prof.miss_rate = 0.4;
  std::size_t n_gt = 0, n_det = 0;
  Identity next = 1;
  for (std::uint64_t f = 0; n_gt < 10000; ++f) {
    FrameTruth t{static_cast<std::int64_t>(f), {}, {}};
    for (int i = 0; i < 8; ++i) t.objects.push_back(gt(next++, 0, box(60 + 110.0 * i, 270, 50, 50)));
    Rng rng(3, "rate", f);
    n_det += simulate_detections(t, prof, Source::Edge, {960, 540, 1}, rng).size();
    n_gt += t.objects.size();
  }
  EXPECT_NEAR(static_cast<double>(n_det) / static_cast<double>(n_gt), 0.6, 0.02);
}

TEST(SimulateDetections, PersistentMissesRepeatAcrossFrames) {
  DetectorProfile prof;
  prof.miss_rate = 0.4;
  prof.miss_persistence = 1.0;
  const FrameTruth base{0, {gt(11, 0, box(100, 100, 40, 40)), gt(12, 0, box(300, 100, 40, 40)),
                            gt(13, 0, box(500, 100, 40, 40)), gt(14, 0, box(700, 100, 40, 40))},
                        {}};
  std::optional<std::size_t> first;
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng rng(4, "persist", i);
    const auto n = simulate_detections(base, prof, Source::Edge, {960, 540, 1}, rng).size();
    if (!first) first = n;
    EXPECT_EQ(n, *first);
  }
}

TEST(SimulateDetections, ScoresInRangeAndBoxesPositive) {
  SceneParams p;
  p.n_frames = 100;
  const Trace t = generate_scene(p, 7);
  for (const auto& f : t.frames) {
    Rng rng(9, "props", static_cast<std::uint64_t>(f.frame_index));
    for (const auto& d : simulate_detections(f, default_edge_profile(), Source::Edge, frame_spec(t.header), rng)) {
      EXPECT_GE(d.score, 0.0);
      EXPECT_LE(d.score, 1.0);
      EXPECT_TRUE(d.bbox.valid());
      EXPECT_GE(d.label, 0);
      EXPECT_LT(d.label, p.n_classes);
    }
  }
}

TEST(SimulateDetections, PerfectProfileScoresMapOne) {
  SceneParams p;
  p.n_frames = 120;
  const Trace t = generate_scene(p, 10);
  std::vector<FramePredictions> preds;
  for (const auto& f : t.frames) {
    Rng rng(1, "perfect", static_cast<std::uint64_t>(f.frame_index));
    preds.push_back(simulate_detections(f, perfect_profile(), Source::Cloud, frame_spec(t.header), rng));
  }
  const auto r = mean_ap(preds, t.frames);
  ASSERT_TRUE(r.map_05);
  EXPECT_EQ(*r.map_05, 1.0);
}
