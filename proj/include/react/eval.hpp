#pragma once

// Detection quality: per-class average precision, mAP at a fixed IoU, and a
// six-way error attribution where each category is scored by the mAP gained
// from fixing only that category's errors.

#include <array>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "react/core.hpp"
#include "react/geometry.hpp"

namespace react {

using FramePredictions = std::vector<Detection>;

constexpr std::size_t kNoMatch = static_cast<std::size_t>(-1);

struct FrameMatch {
  std::vector<bool> is_tp;                // per prediction, input order
  std::vector<std::size_t> matched_gt;    // per prediction, kNoMatch for FP
  std::vector<std::size_t> unmatched_gt;  // GT indices never matched
};

// Greedy matching of score-sorted predictions: each takes the highest-IoU
// still-unmatched ground truth of its own class with IoU >= iou_thr.
inline FrameMatch match_frame(std::span<const Detection> preds, std::span<const TruthObject> gts, double iou_thr) {
  for (std::size_t i = 1; i < preds.size(); ++i)
    if (preds[i].score > preds[i - 1].score) throw ContractError("match_frame: predictions not sorted by score");
  FrameMatch m;
  m.is_tp.assign(preds.size(), false);
  m.matched_gt.assign(preds.size(), kNoMatch);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t p = 0; p < preds.size(); ++p) {
    std::size_t best = kNoMatch;
    double best_iou = iou_thr;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].label != preds[p].label) continue;
      const double v = iou(preds[p].bbox, gts[g].bbox);
      if (v >= best_iou && (best == kNoMatch || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    if (best != kNoMatch) {
      taken[best] = true;
      m.is_tp[p] = true;
      m.matched_gt[p] = best;
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (!taken[g]) m.unmatched_gt.push_back(g);
  return m;
}

struct ScoredOutcome {
  double score = 0.0;
  bool tp = false;
};

enum class ApInterpolation { AllPoint, ElevenPoint };

// Area under the interpolated precision/recall curve. Outcomes are ranked by
// score, ties keeping input order.
inline double average_precision(std::span<const ScoredOutcome> outcomes, std::size_t n_gt,
                                ApInterpolation interp = ApInterpolation::AllPoint) {
  if (n_gt == 0) throw ContractError("average_precision: class has no ground truth");
  std::vector<ScoredOutcome> ranked(outcomes.begin(), outcomes.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score > b.score; });

  std::vector<double> recall, precision;
  recall.reserve(ranked.size());
  precision.reserve(ranked.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    tp += ranked[i].tp ? 1 : 0;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }

  if (interp == ApInterpolation::ElevenPoint) {
    double ap = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double level = t / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < recall.size(); ++i)
        if (recall[i] >= level) best = std::max(best, precision[i]);
      ap += best / 11.0;
    }
    return ap;
  }

  // Sentinels at recall 0 and 1, then the monotone precision envelope.
  std::vector<double> mrec{0.0}, mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i)
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  return ap;
}

enum class ErrorType { Cls = 0, Loc, Both, Dupe, Bkg, Miss };
constexpr std::size_t kErrorTypes = 6;

inline std::string_view to_string(ErrorType e) noexcept {
  constexpr std::array<std::string_view, kErrorTypes> names{"cls", "loc", "both", "dupe", "bkg", "miss"};
  return names[static_cast<std::size_t>(e)];
}

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct ErrorBreakdown {
  std::array<double, kErrorTypes> delta_map{};     // mAP gain from fixing each type alone
  std::array<std::size_t, kErrorTypes> count{};    // raw number of errors of each type

  double operator[](ErrorType e) const noexcept { return delta_map[static_cast<std::size_t>(e)]; }
  std::size_t count_of(ErrorType e) const noexcept { return count[static_cast<std::size_t>(e)]; }
};

struct MetricsReport {
  std::optional<double> map_05;  // empty when no class has ground truth
  std::map<ClassId, double> per_class_ap;
  std::map<ClassId, ClassCounts> counts;
  ErrorBreakdown errors;
};

// Every prediction and ground-truth object of a run, matched once. Error
// attribution and fix-and-recompute operate on this snapshot.
class EvaluationSet {
 public:
  struct Pred {
    std::size_t frame = 0;
    ClassId label = 0;
    double score = 0.0;
    BBox bbox;
    bool tp = false;
    std::size_t gt = kNoMatch;      // global GT index matched (TP) or targeted (Cls/Loc)
    std::optional<ErrorType> error;  // set for false positives
  };
  struct Gt {
    std::size_t frame = 0;
    ClassId label = 0;
    bool matched = false;
    bool targeted = false;  // some Cls or Loc error points at it
  };

  EvaluationSet(std::span<const FramePredictions> preds, std::span<const FrameTruth> truths, double iou_thr,
                double tb = 0.1)
      : iou_thr_(iou_thr) {
    if (preds.size() != truths.size()) throw ContractError("evaluation: prediction/truth frame count mismatch");
    for (std::size_t f = 0; f < truths.size(); ++f) {
      const std::size_t gt_base = gts_.size();
      for (const auto& g : truths[f].objects) {
        gts_.push_back({f, g.label});
        if (std::find(classes_.begin(), classes_.end(), g.label) == classes_.end()) classes_.push_back(g.label);
      }

      std::vector<Detection> sorted(preds[f].begin(), preds[f].end());
      std::stable_sort(sorted.begin(), sorted.end(),
                       [](const Detection& a, const Detection& b) { return a.score > b.score; });
      const auto& gt_objs = truths[f].objects;
      const FrameMatch m = match_frame(sorted, gt_objs, iou_thr);

      for (std::size_t p = 0; p < sorted.size(); ++p) {
        Pred pr{f, sorted[p].label, sorted[p].score, sorted[p].bbox, m.is_tp[p], kNoMatch, std::nullopt};
        if (pr.tp) {
          pr.gt = gt_base + m.matched_gt[p];
          gts_[pr.gt].matched = true;
        } else {
          classify(pr, sorted[p], gt_objs, gt_base, iou_thr, tb);
        }
        preds_.push_back(pr);
      }
    }
    std::sort(classes_.begin(), classes_.end());
    for (const auto& p : preds_)
      if (p.error && (*p.error == ErrorType::Cls || *p.error == ErrorType::Loc)) gts_[p.gt].targeted = true;
  }

  const std::vector<Pred>& predictions() const noexcept { return preds_; }
  const std::vector<Gt>& ground_truth() const noexcept { return gts_; }
  const std::vector<ClassId>& classes() const noexcept { return classes_; }

  bool is_miss(const Gt& g) const noexcept { return !g.matched && !g.targeted; }

  // Per-class AP after fixing the error types set in `fix`.
  std::map<ClassId, double> class_ap(std::array<bool, kErrorTypes> fix, ApInterpolation interp) const {
    std::map<ClassId, std::vector<ScoredOutcome>> outcomes;
    std::map<ClassId, std::size_t> n_gt;
    for (ClassId c : classes_) {
      outcomes[c];
      n_gt[c] = 0;
    }
    for (const auto& g : gts_)
      if (!(fix[idx(ErrorType::Miss)] && is_miss(g))) ++n_gt[g.label];

    std::vector<bool> claimed(gts_.size(), false);
    for (std::size_t i = 0; i < gts_.size(); ++i) claimed[i] = gts_[i].matched;

    // preds_ is not globally score-sorted; fixes that claim a GT must be
    // resolved highest score first.
    std::vector<std::size_t> order(preds_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds_[a].score > preds_[b].score; });
    std::vector<std::optional<ScoredOutcome>> resolved(preds_.size());
    std::vector<ClassId> resolved_class(preds_.size());
    for (std::size_t i : order) {
      const Pred& p = preds_[i];
      resolved_class[i] = p.label;
      if (p.tp) {
        resolved[i] = ScoredOutcome{p.score, true};
        continue;
      }
      const ErrorType e = *p.error;
      if (!fix[idx(e)]) {
        resolved[i] = ScoredOutcome{p.score, false};
        continue;
      }
      if (e == ErrorType::Cls || e == ErrorType::Loc) {
        if (!claimed[p.gt]) {
          claimed[p.gt] = true;
          resolved_class[i] = gts_[p.gt].label;
          resolved[i] = ScoredOutcome{p.score, true};
        }
        // else: fixing would only produce a duplicate, so the prediction is dropped
      }
      // Both, Dupe, Bkg fixes drop the prediction.
    }
    for (std::size_t i = 0; i < preds_.size(); ++i) {
      if (!resolved[i]) continue;
      auto it = outcomes.find(resolved_class[i]);
      if (it != outcomes.end()) it->second.push_back(*resolved[i]);  // classes without GT are ignored
    }

    std::map<ClassId, double> ap;
    for (ClassId c : classes_) {
      if (n_gt[c] == 0) {
        // Every GT of the class was forgiven as a miss.
        const bool clean = std::all_of(outcomes[c].begin(), outcomes[c].end(), [](auto& o) { return o.tp; });
        ap[c] = clean ? 1.0 : 0.0;
      } else {
        ap[c] = average_precision(outcomes[c], n_gt[c], interp);
      }
    }
    return ap;
  }

  std::optional<double> map(std::array<bool, kErrorTypes> fix, ApInterpolation interp) const {
    if (classes_.empty()) return std::nullopt;
    const auto ap = class_ap(fix, interp);
    double sum = 0.0;
    for (const auto& [c, v] : ap) sum += v;
    return sum / static_cast<double>(ap.size());
  }

  static constexpr std::size_t idx(ErrorType e) noexcept { return static_cast<std::size_t>(e); }

 private:
  // Error type of a false positive, checked in the order Loc, Cls, Dupe, Bkg,
  // with Both as the remainder.
  static void classify(Pred& pr, const Detection& d, const std::vector<TruthObject>& gts, std::size_t gt_base,
                       double tf, double tb) {
    double same_max = 0.0, other_max = 0.0;
    std::size_t same_arg = kNoMatch, other_arg = kNoMatch;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(d.bbox, gts[g].bbox);
      if (gts[g].label == d.label) {
        if (same_arg == kNoMatch || v > same_max) same_max = v, same_arg = g;
      } else {
        if (other_arg == kNoMatch || v > other_max) other_max = v, other_arg = g;
      }
    }
    if (same_arg != kNoMatch && same_max >= tb && same_max < tf) {
      pr.error = ErrorType::Loc;
      pr.gt = gt_base + same_arg;
    } else if (other_arg != kNoMatch && other_max >= tf) {
      pr.error = ErrorType::Cls;
      pr.gt = gt_base + other_arg;
    } else if (same_arg != kNoMatch && same_max >= tf) {
      pr.error = ErrorType::Dupe;
    } else if (std::max(same_max, other_max) < tb) {
      pr.error = ErrorType::Bkg;
    } else {
      pr.error = ErrorType::Both;
    }
  }

  double iou_thr_;
  std::vector<Pred> preds_;
  std::vector<Gt> gts_;
  std::vector<ClassId> classes_;
};

// mAP and per-class AP/counts. Frames are aligned by position.
inline MetricsReport mean_ap(std::span<const FramePredictions> preds, std::span<const FrameTruth> truths,
                             double iou_thr = 0.5, ApInterpolation interp = ApInterpolation::AllPoint) {
  const EvaluationSet set(preds, truths, iou_thr);
  MetricsReport r;
  r.per_class_ap = set.class_ap({}, interp);
  r.map_05 = set.map({}, interp);
  for (ClassId c : set.classes()) r.counts[c];
  for (const auto& p : set.predictions()) {
    auto it = r.counts.find(p.label);
    if (it == r.counts.end()) continue;
    (p.tp ? it->second.tp : it->second.fp)++;
  }
  for (const auto& g : set.ground_truth())
    if (!g.matched) r.counts[g.label].fn++;
  return r;
}

inline ErrorBreakdown tide_breakdown(std::span<const FramePredictions> preds, std::span<const FrameTruth> truths,
                                     double tf = 0.5, double tb = 0.1,
                                     ApInterpolation interp = ApInterpolation::AllPoint) {
  if (!(tb < tf)) throw ContractError("tide_breakdown: background threshold must be below foreground threshold");
  const EvaluationSet set(preds, truths, tf, tb);
  ErrorBreakdown out;
  for (const auto& p : set.predictions())
    if (p.error) out.count[EvaluationSet::idx(*p.error)]++;
  for (const auto& g : set.ground_truth())
    if (set.is_miss(g)) out.count[EvaluationSet::idx(ErrorType::Miss)]++;

  const auto base = set.map({}, interp);
  if (!base) return out;
  for (std::size_t e = 0; e < kErrorTypes; ++e) {
    std::array<bool, kErrorTypes> fix{};
    fix[e] = true;
    out.delta_map[e] = *set.map(fix, interp) - *base;
  }
  return out;
}

// mAP with every error category fixed at once.
inline std::optional<double> fully_fixed_map(std::span<const FramePredictions> preds,
                                             std::span<const FrameTruth> truths, double tf = 0.5, double tb = 0.1) {
  const EvaluationSet set(preds, truths, tf, tb);
  std::array<bool, kErrorTypes> all;
  all.fill(true);
  return set.map(all, ApInterpolation::AllPoint);
}

inline MetricsReport evaluate(std::span<const FramePredictions> preds, std::span<const FrameTruth> truths,
                              double iou_thr = 0.5, ApInterpolation interp = ApInterpolation::AllPoint) {
  MetricsReport r = mean_ap(preds, truths, iou_thr, interp);
  r.errors = tide_breakdown(preds, truths, iou_thr, 0.1, interp);
  return r;
}

}  // namespace react
