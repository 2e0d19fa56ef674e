#pragma once

// Scene-graph detection metrics: Recall@K, mean Recall@K, head/body/tail group
// recall and zero-shot Recall@K over ranked triplet predictions.
//
// A prediction matches a GT relation when the foreground argmax of its subject,
// object and predicate distributions equal the GT labels and both boxes reach
// the IoU threshold. Predictions are scanned in rank order and each consumes
// at most one GT (the lowest-index unmatched one it matches), so the matching
// for every cutoff K is a prefix of one greedy pass.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sgtrkit/assembler.hpp"
#include "sgtrkit/error.hpp"
#include "sgtrkit/geometry.hpp"
#include "sgtrkit/matcher.hpp"

namespace sgtrkit {

// (sub_label, pred_label, obj_label)
using LabelCombo = std::array<std::size_t, 3>;

inline LabelCombo combo_of(const GTRelation& g) noexcept { return {g.sub_label, g.pred_label, g.obj_label}; }

inline const std::vector<std::string>& group_names() {
  static const std::vector<std::string> names{"head", "body", "tail"};
  return names;
}

struct EvalConfig {
  std::vector<std::size_t> ks{20, 50, 100};
  double iou_threshold = 0.5;
  std::map<std::size_t, std::string> predicate_groups;    // empty: no group recall
  std::optional<std::set<LabelCombo>> zero_shot_combos;  // combos seen in training

  void validate() const {
    if (ks.empty()) throw ConfigError("eval.ks must list at least one cutoff");
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (ks[i] == 0) throw ConfigError("eval.ks[" + std::to_string(i) + "] must be positive");
      if (i > 0 && ks[i] <= ks[i - 1]) throw ConfigError("eval.ks must be strictly ascending");
    }
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
      throw ConfigError("eval.iou_threshold = " + std::to_string(iou_threshold) + " outside (0, 1)");
    }
    for (const auto& [cls, group] : predicate_groups) {
      const auto& names = group_names();
      if (std::find(names.begin(), names.end(), group) == names.end()) {
        throw ConfigError("eval.predicate_groups[" + std::to_string(cls) + "] = \"" + group +
                          "\" is not one of head/body/tail");
      }
    }
  }
};

struct ImageResult {
  std::vector<Triplet> ranked;  // score descending
  std::vector<GTRelation> gts;
};

using RecallByK = std::map<std::size_t, double>;

struct EvalReport {
  RecallByK recall_at;
  RecallByK mean_recall_at;
  std::map<std::size_t, std::map<std::size_t, double>> per_predicate_recall;  // K -> class -> recall
  std::map<std::size_t, std::map<std::string, double>> group_recall;         // K -> group -> recall
  std::optional<RecallByK> zero_shot_recall_at;
};

inline bool triplet_match(const Triplet& pred, const GTRelation& gt, double iou_threshold) {
  return foreground_argmax(pred.sub_class) == gt.sub_label && foreground_argmax(pred.obj_class) == gt.obj_label &&
         foreground_argmax(pred.pred_class) == gt.pred_label && iou(pred.sub_box, gt.sub_box) >= iou_threshold &&
         iou(pred.obj_box, gt.obj_box) >= iou_threshold;
}

// Rank of the prediction that claimed each GT, if any within the first
// `max_rank` predictions.
struct GreedyMatch {
  std::vector<std::optional<std::size_t>> hit_rank;
  std::vector<std::optional<std::size_t>> pred_to_gt;

  bool hit_within(std::size_t gt, std::size_t k) const { return hit_rank[gt].has_value() && *hit_rank[gt] < k; }
};

inline GreedyMatch greedy_match(const std::vector<Triplet>& ranked, const std::vector<GTRelation>& gts,
                                double iou_threshold, std::size_t max_rank) {
  GreedyMatch m;
  m.hit_rank.assign(gts.size(), std::nullopt);
  const std::size_t n = std::min(max_rank, ranked.size());
  m.pred_to_gt.assign(n, std::nullopt);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (m.hit_rank[g] || !triplet_match(ranked[r], gts[g], iou_threshold)) continue;
      m.hit_rank[g] = r;
      m.pred_to_gt[r] = g;
      break;
    }
  }
  return m;
}

namespace detail {

inline std::size_t max_k(const EvalConfig& cfg) { return *std::max_element(cfg.ks.begin(), cfg.ks.end()); }

// Fraction of the GT indices in `subset` hit within k.
inline double subset_recall(const GreedyMatch& m, const std::vector<std::size_t>& subset, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t g : subset)
    if (m.hit_within(g, k)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(subset.size());
}

inline std::vector<GreedyMatch> match_corpus(const std::vector<ImageResult>& images, const EvalConfig& cfg) {
  std::vector<GreedyMatch> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(greedy_match(img.ranked, img.gts, cfg.iou_threshold, max_k(cfg)));
  return out;
}

}  // namespace detail

// Per-image recall for every cutoff.
inline RecallByK recall_at_k(const std::vector<Triplet>& ranked, const std::vector<GTRelation>& gts,
                             const EvalConfig& cfg) {
  cfg.validate();
  if (gts.empty()) throw UndefinedMetricError("recall@K is undefined for an image without GT relations");
  const auto m = greedy_match(ranked, gts, cfg.iou_threshold, detail::max_k(cfg));
  std::vector<std::size_t> all(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g) all[g] = g;
  RecallByK out;
  for (std::size_t k : cfg.ks) out[k] = detail::subset_recall(m, all, k);
  return out;
}

// Corpus Recall@K: mean of per-image recall over images that have GT.
inline RecallByK corpus_recall_at_k(const std::vector<ImageResult>& images, const EvalConfig& cfg) {
  cfg.validate();
  RecallByK sum;
  std::size_t counted = 0;
  for (const auto& img : images) {
    if (img.gts.empty()) continue;
    const auto r = recall_at_k(img.ranked, img.gts, cfg);
    for (std::size_t k : cfg.ks) sum[k] += r.at(k);
    ++counted;
  }
  if (counted == 0) throw UndefinedMetricError("recall@K is undefined for a corpus without GT relations");
  for (auto& [k, v] : sum) v /= static_cast<double>(counted);
  return sum;
}

struct MeanRecall {
  RecallByK mean_recall_at;
  std::map<std::size_t, std::map<std::size_t, double>> per_predicate;  // K -> class -> recall
};

// Per predicate class: mean over images containing that class of the image's
// recall restricted to it. mR@K averages those over classes present in the GT.
inline MeanRecall mean_recall_at_k(const std::vector<ImageResult>& images, const EvalConfig& cfg) {
  cfg.validate();
  const auto matches = detail::match_corpus(images, cfg);
  std::map<std::size_t, std::map<std::size_t, double>> sums;  // K -> class -> sum
  std::map<std::size_t, std::size_t> images_with_class;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t g = 0; g < images[i].gts.size(); ++g) by_class[images[i].gts[g].pred_label].push_back(g);
    for (const auto& [cls, subset] : by_class) {
      ++images_with_class[cls];
      for (std::size_t k : cfg.ks) sums[k][cls] += detail::subset_recall(matches[i], subset, k);
    }
  }
  MeanRecall out;
  for (std::size_t k : cfg.ks) {
    double total = 0.0;
    for (const auto& [cls, n] : images_with_class) {
      const double r = sums[k][cls] / static_cast<double>(n);
      out.per_predicate[k][cls] = r;
      total += r;
    }
    out.mean_recall_at[k] = images_with_class.empty() ? 0.0 : total / static_cast<double>(images_with_class.size());
  }
  return out;
}

struct GroupAndZeroShot {
  std::map<std::size_t, std::map<std::string, double>> group_recall;
  std::optional<RecallByK> zero_shot_recall_at;
};

// Group recall averages per-predicate recalls within head/body/tail (groups
// with no class present are omitted). zR@K is Recall@K over GT whose label
// combo is not in the seen set; absent when there is no such GT.
inline GroupAndZeroShot group_and_zero_shot(const std::vector<ImageResult>& images, const EvalConfig& cfg) {
  cfg.validate();
  GroupAndZeroShot out;
  if (!cfg.predicate_groups.empty()) {
    const auto mr = mean_recall_at_k(images, cfg);
    for (std::size_t k : cfg.ks) {
      std::map<std::string, std::pair<double, std::size_t>> acc;
      for (const auto& [cls, r] : mr.per_predicate.at(k)) {
        const auto it = cfg.predicate_groups.find(cls);
        if (it == cfg.predicate_groups.end()) {
          throw ConfigError("predicate class " + std::to_string(cls) + " has no head/body/tail group");
        }
        acc[it->second].first += r;
        ++acc[it->second].second;
      }
      for (const auto& [group, sn] : acc) out.group_recall[k][group] = sn.first / static_cast<double>(sn.second);
    }
  }
  if (cfg.zero_shot_combos) {
    const auto matches = detail::match_corpus(images, cfg);
    RecallByK sum;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      std::vector<std::size_t> unseen;
      for (std::size_t g = 0; g < images[i].gts.size(); ++g)
        if (!cfg.zero_shot_combos->contains(combo_of(images[i].gts[g]))) unseen.push_back(g);
      if (unseen.empty()) continue;
      for (std::size_t k : cfg.ks) sum[k] += detail::subset_recall(matches[i], unseen, k);
      ++counted;
    }
    if (counted > 0) {
      for (auto& [k, v] : sum) v /= static_cast<double>(counted);
      out.zero_shot_recall_at = sum;
    }
  }
  return out;
}

inline EvalReport evaluate(const std::vector<ImageResult>& images, const EvalConfig& cfg) {
  EvalReport r;
  r.recall_at = corpus_recall_at_k(images, cfg);
  auto mr = mean_recall_at_k(images, cfg);
  r.mean_recall_at = std::move(mr.mean_recall_at);
  r.per_predicate_recall = std::move(mr.per_predicate);
  auto gz = group_and_zero_shot(images, cfg);
  r.group_recall = std::move(gz.group_recall);
  r.zero_shot_recall_at = std::move(gz.zero_shot_recall_at);
  return r;
}

// Aligned text table in percent, one column per metric and cutoff. Group
// columns use the largest cutoff.
inline std::string format_report_table(const EvalReport& r) {
  std::vector<std::string> header, values;
  auto cell = [&](const std::string& name, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
    header.push_back(name);
    values.emplace_back(buf);
  };
  for (const auto& [k, v] : r.recall_at) cell("R@" + std::to_string(k), v);
  for (const auto& [k, v] : r.mean_recall_at) cell("mR@" + std::to_string(k), v);
  if (!r.group_recall.empty()) {
    const auto& [k, groups] = *r.group_recall.rbegin();
    for (const auto& g : group_names()) {
      const auto it = groups.find(g);
      if (it != groups.end()) cell(g + "@" + std::to_string(k), it->second);
    }
  }
  if (r.zero_shot_recall_at) {
    for (const auto& [k, v] : *r.zero_shot_recall_at) cell("zR@" + std::to_string(k), v);
  }
  std::ostringstream head, body;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::size_t w = std::max(header[i].size(), values[i].size());
    const std::string sep = i == 0 ? "" : " | ";
    head << sep << std::string(w - header[i].size(), ' ') << header[i];
    body << sep << std::string(w - values[i].size(), ' ') << values[i];
  }
  return head.str() + "\n" + body.str() + "\n";
}

}  // namespace sgtrkit
