#include "instances.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace react;
using namespace testing_support;

namespace {

const BBox kBox = box(100, 100, 40, 40);

// A box of the same size as `b` shifted right so IoU(b, result) == target.
BBox with_iou(const BBox& b, double target) {
  // overlap width o: o*h / (2wh - o*h) = t  =>  o = 2wt / (1 + t)
  const double o = 2.0 * b.w * target / (1.0 + target);
  return box(b.cx + (b.w - o), b.cy, b.w, b.h);
}

ScoredOutcome tp(double s) { return {s, true}; }
ScoredOutcome fp(double s) { return {s, false}; }

std::vector<FrameTruth> one_frame(std::vector<TruthObject> objs) { return {FrameTruth{0, std::move(objs), {}}}; }

using Instance = instances::EvalInstance;

Instance random_instance(std::uint64_t seed) { return instances::random_eval(seed); }

}  // namespace

TEST(MatchFrame, Examples) {
  const std::vector<TruthObject> g{gt(1, 0, kBox)};
  {
    const std::vector<Detection> p{det(0, kBox, 0.9)};
    const auto m = match_frame(p, g, 0.5);
    EXPECT_EQ(m.is_tp, std::vector<bool>{true});
    EXPECT_TRUE(m.unmatched_gt.empty());
  }
  {
    const std::vector<Detection> p{det(0, kBox, 0.9), det(0, kBox, 0.8)};
    const auto m = match_frame(p, g, 0.5);
    EXPECT_EQ(m.is_tp, (std::vector<bool>{true, false}));
    EXPECT_EQ(m.matched_gt[1], kNoMatch);
  }
  {
    const std::vector<Detection> p{det(0, with_iou(kBox, 0.4), 0.9)};
    const auto m = match_frame(p, g, 0.5);
    EXPECT_EQ(m.is_tp, std::vector<bool>{false});
    EXPECT_EQ(m.unmatched_gt, std::vector<std::size_t>{0});
  }
}

TEST(MatchFrame, PrefersHighestIouAndSameClass) {
  const std::vector<TruthObject> g{gt(1, 0, with_iou(kBox, 0.6)), gt(2, 0, with_iou(kBox, 0.9)), gt(3, 1, kBox)};
  const std::vector<Detection> p{det(0, kBox, 0.9)};
  const auto m = match_frame(p, g, 0.5);
  EXPECT_EQ(m.matched_gt[0], 1u);
  EXPECT_EQ(m.unmatched_gt, (std::vector<std::size_t>{0, 2}));
}

TEST(MatchFrame, RequiresScoreOrder) {
  const std::vector<Detection> p{det(0, kBox, 0.1), det(0, kBox, 0.9)};
  EXPECT_THROW(match_frame(p, std::vector<TruthObject>{}, 0.5), ContractError);
}

TEST(AveragePrecision, HandCases) {
  EXPECT_DOUBLE_EQ(average_precision(std::vector{tp(0.9), fp(0.8)}, 1), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(std::vector{fp(0.95), tp(0.9)}, 1), 0.5);
  EXPECT_DOUBLE_EQ(average_precision(std::vector<ScoredOutcome>{}, 3), 0.0);
  // TP, FP, TP with 2 GT: 0.5*1 + 0.5*(2/3)
  EXPECT_DOUBLE_EQ(average_precision(std::vector{tp(0.9), fp(0.8), tp(0.7)}, 2), 0.5 + 1.0 / 3.0);
  EXPECT_THROW(average_precision(std::vector{tp(1.0)}, 0), ContractError);
}

TEST(AveragePrecision, TiesKeepInputOrder) {
  EXPECT_DOUBLE_EQ(average_precision(std::vector{fp(0.5), tp(0.5)}, 1), 0.5);
  EXPECT_DOUBLE_EQ(average_precision(std::vector{tp(0.5), fp(0.5)}, 1), 1.0);
}

TEST(AveragePrecision, ElevenPoint) {
  // recall 0.5 at precision 1, recall 1 at precision 2/3: levels 0..0.5 -> 1, 0.6..1 -> 2/3
  const double expected = (6.0 * 1.0 + 5.0 * 2.0 / 3.0) / 11.0;
  EXPECT_NEAR(average_precision(std::vector{tp(0.9), fp(0.8), tp(0.7)}, 2, ApInterpolation::ElevenPoint), expected,
              1e-12);
  EXPECT_DOUBLE_EQ(average_precision(std::vector{tp(0.9)}, 1, ApInterpolation::ElevenPoint), 1.0);
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreTransforms) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s, "ap-monotone");
    std::vector<ScoredOutcome> a;
    const int n = rng.uniform_int(0, 20);
    std::size_t n_tp = 0;
    for (int i = 0; i < n; ++i) {
      a.push_back({rng.uniform(), rng.bernoulli(0.5)});
      n_tp += a.back().tp;
    }
    const std::size_t n_gt = n_tp + static_cast<std::size_t>(rng.uniform_int(0, 3)) + (n_tp == 0);
    auto b = a;
    for (auto& o : b) o.score = std::exp(3.0 * o.score) + 7.0;
    const double ap = average_precision(a, n_gt);
    EXPECT_DOUBLE_EQ(ap, average_precision(b, n_gt));
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);

    // AP = 1 iff a prefix of the ranking holds every GT and no FP
    auto ranked = a;
    std::stable_sort(ranked.begin(), ranked.end(), [](auto& x, auto& y) { return x.score > y.score; });
    std::size_t prefix_tp = 0;
    for (const auto& o : ranked) {
      if (!o.tp) break;
      ++prefix_tp;
    }
    EXPECT_EQ(ap == 1.0, prefix_tp == n_gt) << "seed " << s;
  }
}

TEST(MeanAp, Examples) {
  const auto truths = one_frame({gt(1, 0, kBox), gt(2, 1, box(300, 300, 50, 50))});
  {
    const std::vector<FramePredictions> p{{det(0, kBox, 0.9), det(1, box(300, 300, 50, 50), 0.8)}};
    EXPECT_EQ(*mean_ap(p, truths).map_05, 1.0);
  }
  {
    const std::vector<FramePredictions> p{{det(0, kBox, 0.9)}};
    const auto r = mean_ap(p, truths);
    EXPECT_EQ(*r.map_05, 0.5);
    EXPECT_EQ(r.per_class_ap.at(0), 1.0);
    EXPECT_EQ(r.per_class_ap.at(1), 0.0);
  }
  {
    const std::vector<FramePredictions> p{{}};
    EXPECT_EQ(*mean_ap(p, truths).map_05, 0.0);
  }
}

TEST(MeanAp, NoGroundTruthIsMarkedNotZero) {
  const std::vector<FramePredictions> p{{det(0, kBox, 0.9)}, {}};
  const std::vector<FrameTruth> t{FrameTruth{0, {}, {}}, FrameTruth{1, {}, {}}};
  const auto r = mean_ap(p, t);
  EXPECT_FALSE(r.map_05.has_value());
  EXPECT_TRUE(r.per_class_ap.empty());
  EXPECT_EQ(to_json(r)["map05"], "no-ground-truth");
}

TEST(MeanAp, ClassesWithoutGtAreExcluded) {
  const auto truths = one_frame({gt(1, 0, kBox)});
  const std::vector<FramePredictions> p{{det(0, kBox, 0.9), det(3, box(300, 300, 30, 30), 0.95)}};
  const auto r = mean_ap(p, truths);
  EXPECT_EQ(*r.map_05, 1.0);
  EXPECT_EQ(r.per_class_ap.size(), 1u);
}

TEST(MeanAp, CountsPerClass) {
  const auto truths = one_frame({gt(1, 0, kBox), gt(2, 0, box(300, 300, 40, 40))});
  const std::vector<FramePredictions> p{{det(0, kBox, 0.9), det(0, kBox, 0.8)}};
  const auto r = mean_ap(p, truths);
  EXPECT_EQ(r.counts.at(0).tp, 1u);
  EXPECT_EQ(r.counts.at(0).fp, 1u);
  EXPECT_EQ(r.counts.at(0).fn, 1u);
}

TEST(MeanAp, AgreesWithThresholdSweepOracle) {
  int nontrivial = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const Instance in = random_instance(s);
    const auto ours = mean_ap(in.preds, in.truths).map_05;
    const auto ref = oracle::sweep_map(in.preds, in.truths);
    ASSERT_EQ(ours.has_value(), ref.has_value()) << "seed " << s;
    if (!ours) continue;
    EXPECT_NEAR(*ours, *ref, 1e-9) << "seed " << s;
    nontrivial += *ref > 0.0 && *ref < 1.0;
  }
  EXPECT_GE(nontrivial, 200);
}

TEST(Tide, PerfectPredictionsHaveNoErrors) {
  const auto truths = one_frame({gt(1, 0, kBox), gt(2, 1, box(300, 300, 50, 50))});
  const std::vector<FramePredictions> p{{det(0, kBox, 0.9), det(1, box(300, 300, 50, 50), 0.8)}};
  const auto e = tide_breakdown(p, truths);
  for (std::size_t i = 0; i < kErrorTypes; ++i) {
    EXPECT_EQ(e.delta_map[i], 0.0);
    EXPECT_EQ(e.count[i], 0u);
  }
}

TEST(Tide, WrongLabelIsClassificationOnly) {
  const auto truths = one_frame({gt(1, 0, kBox)});  // car
  const std::vector<FramePredictions> p{{det(2, kBox, 0.9)}};  // truck
  const auto e = tide_breakdown(p, truths);
  EXPECT_DOUBLE_EQ(e[ErrorType::Cls], 1.0 - 0.0);
  EXPECT_EQ(e.count_of(ErrorType::Cls), 1u);
  for (auto t : {ErrorType::Loc, ErrorType::Both, ErrorType::Dupe, ErrorType::Bkg, ErrorType::Miss}) {
    EXPECT_EQ(e[t], 0.0) << to_string(t);
    EXPECT_EQ(e.count_of(t), 0u) << to_string(t);
  }
}

TEST(Tide, PureMiss) {
  const auto truths = one_frame({gt(1, 0, kBox)});
  const std::vector<FramePredictions> p{{}};
  const auto e = tide_breakdown(p, truths);
  EXPECT_GT(e[ErrorType::Miss], 0.0);
  EXPECT_EQ(e.count_of(ErrorType::Miss), 1u);
  for (auto t : {ErrorType::Cls, ErrorType::Loc, ErrorType::Both, ErrorType::Dupe, ErrorType::Bkg})
    EXPECT_EQ(e[t], 0.0) << to_string(t);
}

TEST(Tide, ClassifiesEachFalsePositiveKind) {
  const BBox far = box(400, 400, 40, 40);
  const auto truths = one_frame({gt(1, 0, kBox), gt(2, 1, far)});
  const std::vector<FramePredictions> p{{
      det(0, kBox, 0.99),                  // TP
      det(0, kBox, 0.9),                   // Dupe
      det(0, with_iou(kBox, 0.3), 0.8),    // Loc
      det(0, with_iou(far, 0.3), 0.7),     // Both: only a different-class GT in [tb, tf)
      det(1, box(700, 100, 30, 30), 0.6),  // Bkg
      det(0, far, 0.5),                    // Cls
  }};
  const EvaluationSet set(p, truths, 0.5, 0.1);
  std::map<double, ErrorType> by_score;
  for (const auto& pr : set.predictions())
    if (pr.error) by_score[pr.score] = *pr.error;
  EXPECT_EQ(by_score.at(0.9), ErrorType::Dupe);
  EXPECT_EQ(by_score.at(0.8), ErrorType::Loc);
  EXPECT_EQ(by_score.at(0.7), ErrorType::Both);
  EXPECT_EQ(by_score.at(0.6), ErrorType::Bkg);
  EXPECT_EQ(by_score.at(0.5), ErrorType::Cls);
  // The class-1 GT is the target of the Cls error, so it is not a Miss.
  EXPECT_EQ(tide_breakdown(p, truths).count_of(ErrorType::Miss), 0u);
}

TEST(Tide, LocalizationFixRecoversRecall) {
  const auto truths = one_frame({gt(1, 0, kBox)});
  const std::vector<FramePredictions> p{{det(0, with_iou(kBox, 0.3), 0.9)}};
  const auto e = tide_breakdown(p, truths);
  EXPECT_DOUBLE_EQ(e[ErrorType::Loc], 1.0);
  EXPECT_EQ(e[ErrorType::Miss], 0.0);
}

TEST(Tide, RejectsInvertedThresholds) {
  const auto truths = one_frame({gt(1, 0, kBox)});
  const std::vector<FramePredictions> p{{}};
  EXPECT_THROW(tide_breakdown(p, truths, 0.5, 0.5), ContractError);
}

TEST(Tide, DeltasNonNegativeAndFullFixIsPerfect) {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const Instance in = random_instance(s + 1000);
    const auto e = tide_breakdown(in.preds, in.truths);
    for (std::size_t i = 0; i < kErrorTypes; ++i) EXPECT_GE(e.delta_map[i], -1e-12) << "seed " << s << " type " << i;
    const auto full = fully_fixed_map(in.preds, in.truths);
    if (full) {
      EXPECT_NEAR(*full, 1.0, 1e-12) << "seed " << s;
    }
  }
}

TEST(Tide, ErrorCountsCoverEveryFalsePositiveAndUnmatchedGt) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Instance in = random_instance(s + 5000);
    const auto m = mean_ap(in.preds, in.truths);
    const auto e = tide_breakdown(in.preds, in.truths);
    std::size_t fp_errors = 0;
    for (auto t : {ErrorType::Cls, ErrorType::Loc, ErrorType::Both, ErrorType::Dupe, ErrorType::Bkg})
      fp_errors += e.count_of(t);
    std::size_t all_preds = 0, tps = 0, fns = 0;
    for (const auto& f : in.preds) all_preds += f.size();
    for (const auto& [c, n] : m.counts) {
      tps += n.tp;
      fns += n.fn;
    }
    EXPECT_EQ(fp_errors + tps, all_preds);
    EXPECT_LE(e.count_of(ErrorType::Miss), fns);
  }
}

TEST(Evaluate, CsvRowShape) {
  const auto truths = one_frame({gt(1, 0, kBox)});
  const std::vector<FramePredictions> p{{det(0, kBox, 0.9)}};
  RunReport r;
  r.run_id = "x";
  r.metrics = evaluate(p, truths);
  const std::string row = csv_row(r);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(kReportCsvHeader, kReportCsvHeader + std::strlen(kReportCsvHeader), ','));
}
