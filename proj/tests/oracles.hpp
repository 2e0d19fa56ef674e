#pragma once

// Straight-line reference implementations used only by the tests. They work on
// nested std::vector and plain loops and never call into the library's
// algorithmic code, so agreement with the library is meaningful.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Mat out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t t = 0; t < k; ++t) out[i][j] += a[i][t] * b[t][j];
  return out;
}

inline Mat transpose(const Mat& a) {
  if (a.empty()) return {};
  Mat out(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) out[j][i] = a[i][j];
  return out;
}

inline Mat add(const Mat& a, const Mat& b) {
  Mat out = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) out[i][j] += b[i][j];
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> e(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (e[i] = std::exp(x[i] - mx));
  for (double& v : e) v /= s;
  return e;
}

// Box given as (cx, cy, w, h).
struct RefBox {
  double cx, cy, w, h;
};

inline double ref_giou(const RefBox& a, const RefBox& b) {
  const double ax1 = a.cx - a.w / 2, ax2 = a.cx + a.w / 2, ay1 = a.cy - a.h / 2, ay2 = a.cy + a.h / 2;
  const double bx1 = b.cx - b.w / 2, bx2 = b.cx + b.w / 2, by1 = b.cy - b.h / 2, by2 = b.cy + b.h / 2;
  double iw = std::min(ax2, bx2) - std::max(ax1, bx1);
  double ih = std::min(ay2, by2) - std::max(ay1, by1);
  if (iw < 0) iw = 0;
  if (ih < 0) ih = 0;
  const double inter = iw * ih;
  const double uni = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter;
  const double hull = (std::max(ax2, bx2) - std::min(ax1, bx1)) * (std::max(ay2, by2) - std::min(ay1, by1));
  return inter / uni - (hull - uni) / hull;
}

inline double ref_iou(const RefBox& a, const RefBox& b) {
  const double iw = std::max(0.0, std::min(a.cx + a.w / 2, b.cx + b.w / 2) - std::max(a.cx - a.w / 2, b.cx - b.w / 2));
  const double ih = std::max(0.0, std::min(a.cy + a.h / 2, b.cy + b.h / 2) - std::max(a.cy - a.h / 2, b.cy - b.h / 2));
  return iw * ih / (a.w * a.h + b.w * b.h - iw * ih);
}

inline double ref_cos(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

// One correspondence cell: clip(GIoU, 0, 1) / (|dcx| + |dcy| + eps) * cos.
inline double ref_correspondence_cell(const RefBox& ind, const std::vector<double>& ind_cls, const RefBox& ent,
                                      const std::vector<double>& ent_cls, double eps = 1e-3) {
  double g = ref_giou(ind, ent);
  if (g < 0) g = 0;
  if (g > 1) g = 1;
  const double dc = std::fabs(ind.cx - ent.cx) + std::fabs(ind.cy - ent.cy);
  return g / (dc + eps) * ref_cos(ind_cls, ent_cls);
}

// Minimum over all injective column -> row assignments; cost[row][col],
// rows >= cols. Costs are summed in column order.
inline double brute_force_assignment(const Mat& cost, std::vector<std::size_t>* best_rows = nullptr) {
  const std::size_t rows = cost.size(), cols = cost.empty() ? 0 : cost[0].size();
  std::vector<std::size_t> perm(rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  std::set<std::vector<std::size_t>> seen;
  do {
    std::vector<std::size_t> prefix(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cols));
    if (!seen.insert(prefix).second) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += cost[prefix[j]][j];
    if (s < best) {
      best = s;
      if (best_rows) *best_rows = prefix;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ---------------------------------------------------------------------------
// Metrics, from first principles.

struct RefPred {
  std::size_t sub_label, obj_label, pred_label;
  RefBox sub, obj;
};

struct RefGT {
  std::size_t sub_label, obj_label, pred_label;
  RefBox sub, obj;
};

struct RefImage {
  std::vector<RefPred> ranked;
  std::vector<RefGT> gts;
};

inline bool ref_match(const RefPred& p, const RefGT& g, double t) {
  return p.sub_label == g.sub_label && p.obj_label == g.obj_label && p.pred_label == g.pred_label &&
         ref_iou(p.sub, g.sub) >= t && ref_iou(p.obj, g.obj) >= t;
}

// Re-runs the greedy scan from scratch over the top-k predictions.
inline std::vector<bool> ref_hits(const RefImage& img, std::size_t k, double t) {
  std::vector<bool> hit(img.gts.size(), false);
  for (std::size_t r = 0; r < std::min(k, img.ranked.size()); ++r) {
    for (std::size_t g = 0; g < img.gts.size(); ++g) {
      if (!hit[g] && ref_match(img.ranked[r], img.gts[g], t)) {
        hit[g] = true;
        break;
      }
    }
  }
  return hit;
}

template <typename Keep>
std::optional<double> ref_recall(const std::vector<RefImage>& images, std::size_t k, double t, Keep keep) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& img : images) {
    const auto hit = ref_hits(img, k, t);
    std::size_t total = 0, found = 0;
    for (std::size_t g = 0; g < img.gts.size(); ++g) {
      if (!keep(img.gts[g])) continue;
      ++total;
      if (hit[g]) ++found;
    }
    if (total == 0) continue;
    sum += static_cast<double>(found) / static_cast<double>(total);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline double ref_mean_recall(const std::vector<RefImage>& images, std::size_t k, double t) {
  std::set<std::size_t> classes;
  for (const auto& img : images)
    for (const auto& g : img.gts) classes.insert(g.pred_label);
  double s = 0.0;
  for (std::size_t c : classes) s += *ref_recall(images, k, t, [c](const RefGT& g) { return g.pred_label == c; });
  return classes.empty() ? 0.0 : s / static_cast<double>(classes.size());
}

}  // namespace oracle
