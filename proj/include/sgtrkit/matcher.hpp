#pragma once

// Triplet set matching: composite predicate + entity cost between predicted
// triplets and GT relations, solved with the Hungarian algorithm.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sgtrkit/assembler.hpp"
#include "sgtrkit/geometry.hpp"
#include "sgtrkit/matrix.hpp"
#include "sgtrkit/prob.hpp"

namespace sgtrkit {

struct GTRelation {
  Box sub_box;
  std::size_t sub_label = 0;
  Box obj_box;
  std::size_t obj_label = 0;
  std::size_t pred_label = 0;

  CenterPair centers() const noexcept { return centers_of(sub_box, obj_box); }

  friend bool operator==(const GTRelation&, const GTRelation&) = default;
};

struct CostWeights {
  double lambda_p = 1.0;
  double lambda_e = 1.0;
  double w_giou = 1.0;
  double w_l1 = 1.0;
  double w_cls = 1.0;
};

// Dot product of a dense GT one-hot (background coordinate 0) with p.
inline double gt_prob(const ProbVector& p, std::size_t label) {
  if (label >= num_foreground(p)) {
    throw ArgumentError("GT label " + std::to_string(label) + " outside the " + std::to_string(num_foreground(p)) +
                        " foreground classes of the prediction");
  }
  return p[label];
}

// exp(-p_gt . p_pred) + |b_p - b_p^gt|_1
inline double predicate_cost(const Triplet& pred, const GTRelation& gt) {
  return std::exp(-gt_prob(pred.pred_class, gt.pred_label)) + center_pair_l1(pred.centers, gt.centers());
}

inline double entity_cost(const Triplet& pred, const GTRelation& gt, double w_giou, double w_l1, double w_cls) {
  const double giou_term =
      std::exp(-d_giou_clipped(pred.sub_box, gt.sub_box)) * std::exp(-d_giou_clipped(pred.obj_box, gt.obj_box));
  const double l1_term = box_l1(pred.sub_box, gt.sub_box) + box_l1(pred.obj_box, gt.obj_box);
  const double cls_term =
      std::exp(-gt_prob(pred.sub_class, gt.sub_label)) * std::exp(-gt_prob(pred.obj_class, gt.obj_label));
  return w_giou * giou_term + w_l1 * l1_term + w_cls * cls_term;
}

inline double entity_cost(const Triplet& pred, const GTRelation& gt, const CostWeights& w = {}) {
  return entity_cost(pred, gt, w.w_giou, w.w_l1, w.w_cls);
}

// Rows are predictions, columns are GT relations.
struct CostMatrix {
  Matrix values;
};

inline CostMatrix build_cost(const std::vector<Triplet>& preds, const std::vector<GTRelation>& gts,
                             const CostWeights& w = {}) {
  if (preds.empty()) throw DegenerateInputError("build_cost: no predictions");
  if (gts.empty()) throw DegenerateInputError("build_cost: no GT relations");
  CostMatrix c{Matrix(preds.size(), gts.size())};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      c.values(i, j) = w.lambda_p * predicate_cost(preds[i], gts[j]) + w.lambda_e * entity_cost(preds[i], gts[j], w);
    }
  }
  return c;
}

struct MatchAssignment {
  std::vector<std::size_t> gt_to_pred;  // one prediction row per GT column
  double total_cost = 0.0;

  friend bool operator==(const MatchAssignment&, const MatchAssignment&) = default;
};

// Cost assigned to the padding columns that square up a rectangular problem.
inline constexpr double kHungarianSentinel = 1e6;

namespace detail {

// Kuhn-Munkres with row/column potentials on an n x n matrix.
// Returns row_of_col[j] = row assigned to column j.
inline std::vector<std::size_t> solve_square_assignment(const Matrix& a) {
  const std::size_t n = a.rows();
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0, as in the classical formulation.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_of_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
  return row_of_col;
}

}  // namespace detail

// Optimal injective GT -> prediction assignment. Rectangular inputs with more
// predictions than GT are squared up with sentinel columns that are dropped
// afterwards. total_cost is accumulated in GT order.
inline MatchAssignment hungarian(const CostMatrix& cost) {
  const Matrix& c = cost.values;
  const std::size_t n_pred = c.rows(), n_gt = c.cols();
  if (n_gt == 0) return {};
  if (n_pred < n_gt) {
    throw ArgumentError("hungarian: " + std::to_string(n_pred) + " predictions cannot cover " + std::to_string(n_gt) +
                        " GT relations");
  }
  if (!c.all_finite()) throw ArgumentError("hungarian: cost matrix has non-finite entries");
  Matrix square(n_pred, n_pred, kHungarianSentinel);
  for (std::size_t i = 0; i < n_pred; ++i)
    for (std::size_t j = 0; j < n_gt; ++j) square(i, j) = c(i, j);

  const auto row_of_col = detail::solve_square_assignment(square);
  MatchAssignment m;
  m.gt_to_pred.assign(row_of_col.begin(), row_of_col.begin() + static_cast<std::ptrdiff_t>(n_gt));
  for (std::size_t j = 0; j < n_gt; ++j) m.total_cost += c(m.gt_to_pred[j], j);
  return m;
}

}  // namespace sgtrkit
