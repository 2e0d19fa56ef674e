#pragma once

// Forward-only predicate node generator loss, L^pre = L^pre_i + L^pre_p, over
// the GT relations and the predicate nodes they were matched to.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sgtrkit/assembler.hpp"
#include "sgtrkit/geometry.hpp"
#include "sgtrkit/matcher.hpp"
#include "sgtrkit/nodes.hpp"

namespace sgtrkit {

// Lower bound applied to the GT-class probability inside the log.
inline constexpr double kCrossEntropyFloor = 1e-12;

enum class LossNormalization { kSum, kMean };

struct LossReport {
  double pred_center_l1 = 0.0;
  double pred_ce = 0.0;
  double ent_loc_l1_s = 0.0;
  double ent_loc_l1_o = 0.0;
  double ent_loc_giou_s = 0.0;
  double ent_loc_giou_o = 0.0;
  double ent_ce_s = 0.0;
  double ent_ce_o = 0.0;
  double l_pre_p = 0.0;
  double l_pre_i = 0.0;

  double l_pre() const noexcept { return l_pre_p + l_pre_i; }

  friend bool operator==(const LossReport&, const LossReport&) = default;
};

// -log(max(p[label], floor)) against a one-hot target.
inline double cross_entropy(const ProbVector& p, std::size_t label) {
  return -std::log(std::max(gt_prob(p, label), kCrossEntropyFloor));
}

namespace detail {

inline void check_match(const PredicateNodeSet& preds, const std::vector<GTRelation>& gts, const MatchAssignment& match) {
  if (match.gt_to_pred.size() != gts.size()) {
    throw ArgumentError("loss: match has " + std::to_string(match.gt_to_pred.size()) + " entries for " +
                        std::to_string(gts.size()) + " GT relations");
  }
  for (std::size_t i = 0; i < match.gt_to_pred.size(); ++i) {
    if (match.gt_to_pred[i] >= preds.size()) {
      throw ArgumentError("loss: match[" + std::to_string(i) + "] = " + std::to_string(match.gt_to_pred[i]) +
                          " is not a predicate node index (N_r = " + std::to_string(preds.size()) + ")");
    }
  }
}

}  // namespace detail

struct PredicateLossTerms {
  double center_l1 = 0.0;
  double ce = 0.0;
  double total() const noexcept { return center_l1 + ce; }
};

inline PredicateLossTerms predicate_loss(const PredicateNodeSet& preds, const std::vector<GTRelation>& gts,
                                         const MatchAssignment& match) {
  detail::check_match(preds, gts, match);
  PredicateLossTerms t;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const std::size_t k = match.gt_to_pred[i];
    t.center_l1 += center_pair_l1(preds.centers[k], gts[i].centers());
    t.ce += cross_entropy(preds.pred_classes[k], gts[i].pred_label);
  }
  return t;
}

struct LocLossTerms {
  double l1 = 0.0;
  double giou = 0.0;  // sum of (1 - GIoU), unclipped
  double total() const noexcept { return l1 + giou; }
};

inline LocLossTerms indicator_loc_loss(Role role, const PredicateNodeSet& preds, const std::vector<GTRelation>& gts,
                                       const MatchAssignment& match) {
  detail::check_match(preds, gts, match);
  const auto& boxes = role == Role::kSubject ? preds.sub_boxes : preds.obj_boxes;
  LocLossTerms t;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const Box& b = boxes[match.gt_to_pred[i]];
    const Box& g = role == Role::kSubject ? gts[i].sub_box : gts[i].obj_box;
    t.l1 += box_l1(b, g);
    t.giou += 1.0 - giou(b, g);
  }
  return t;
}

inline double indicator_cls_loss(Role role, const PredicateNodeSet& preds, const std::vector<GTRelation>& gts,
                                 const MatchAssignment& match) {
  detail::check_match(preds, gts, match);
  const auto& classes = role == Role::kSubject ? preds.sub_classes : preds.obj_classes;
  double sum = 0.0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    sum += cross_entropy(classes[match.gt_to_pred[i]], role == Role::kSubject ? gts[i].sub_label : gts[i].obj_label);
  }
  return sum;
}

inline LossReport total_pre_loss(const PredicateNodeSet& preds, const std::vector<GTRelation>& gts,
                                 const MatchAssignment& match, LossNormalization norm = LossNormalization::kSum) {
  const auto p = predicate_loss(preds, gts, match);
  const auto ls = indicator_loc_loss(Role::kSubject, preds, gts, match);
  const auto lo = indicator_loc_loss(Role::kObject, preds, gts, match);
  LossReport r;
  r.pred_center_l1 = p.center_l1;
  r.pred_ce = p.ce;
  r.ent_loc_l1_s = ls.l1;
  r.ent_loc_l1_o = lo.l1;
  r.ent_loc_giou_s = ls.giou;
  r.ent_loc_giou_o = lo.giou;
  r.ent_ce_s = indicator_cls_loss(Role::kSubject, preds, gts, match);
  r.ent_ce_o = indicator_cls_loss(Role::kObject, preds, gts, match);
  if (norm == LossNormalization::kMean && !gts.empty()) {
    const double n = static_cast<double>(gts.size());
    for (double* v : {&r.pred_center_l1, &r.pred_ce, &r.ent_loc_l1_s, &r.ent_loc_l1_o, &r.ent_loc_giou_s,
                      &r.ent_loc_giou_o, &r.ent_ce_s, &r.ent_ce_o}) {
      *v /= n;
    }
  }
  r.l_pre_p = r.pred_center_l1 + r.pred_ce;
  r.l_pre_i = (r.ent_loc_l1_s + r.ent_loc_giou_s + r.ent_ce_s) + (r.ent_loc_l1_o + r.ent_loc_giou_o + r.ent_ce_o);
  return r;
}

// Rewrites a match over assembled triplets into one over predicate nodes.
inline MatchAssignment to_predicate_match(const MatchAssignment& triplet_match, const std::vector<Triplet>& triplets) {
  MatchAssignment out;
  out.total_cost = triplet_match.total_cost;
  out.gt_to_pred.reserve(triplet_match.gt_to_pred.size());
  for (std::size_t t : triplet_match.gt_to_pred) {
    if (t >= triplets.size()) {
      throw ArgumentError("match references triplet " + std::to_string(t) + " but only " +
                          std::to_string(triplets.size()) + " exist");
    }
    out.gt_to_pred.push_back(triplets[t].pred_index);
  }
  return out;
}

}  // namespace sgtrkit
