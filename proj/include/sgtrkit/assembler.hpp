#pragma once

// Bipartite graph assembling: link each predicate node to entity nodes through
// its subject/object indicators, then build and rank relation triplets.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "sgtrkit/geometry.hpp"
#include "sgtrkit/matrix.hpp"
#include "sgtrkit/nodes.hpp"
#include "sgtrkit/prob.hpp"

namespace sgtrkit {

enum class Role { kSubject, kObject };

inline const char* to_string(Role r) noexcept { return r == Role::kSubject ? "subject" : "object"; }

// N_r x N_e matching scores between one role's indicators and the entities.
struct CorrespondenceMatrix {
  Matrix values;
  Role role = Role::kSubject;
};

// N_r x K entity indices, best first.
struct LinkIndex {
  std::vector<std::vector<std::size_t>> indices;
  Role role = Role::kSubject;
};

struct Triplet {
  std::size_t pred_index = 0;  // predicate node this triplet came from
  std::size_t sub_index = 0;   // entity node indices
  std::size_t obj_index = 0;
  Box sub_box;
  ProbVector sub_class;
  Box obj_box;
  ProbVector obj_class;
  ProbVector pred_class;
  CenterPair centers;
  double score = 0.0;

  bool self_connected() const noexcept { return sub_index == obj_index; }

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// s_s * s_o * s_p, each the max foreground probability.
inline double triplet_score(const ProbVector& sub, const ProbVector& obj, const ProbVector& pred) {
  return foreground_max(sub) * foreground_max(obj) * foreground_max(pred);
}

struct AssembleOptions {
  std::size_t top_k = 3;
  double eps = kDefaultLocEpsilon;
};

// M[i, j] = d_loc(b_i, b_e,j) * cos(p_i, p_e,j).
inline CorrespondenceMatrix correspondence(const std::vector<Box>& role_boxes, const std::vector<ProbVector>& role_classes,
                                           const EntityNodeSet& entities, Role role,
                                           double eps = kDefaultLocEpsilon) {
  if (role_boxes.empty() || entities.size() == 0) {
    throw ArgumentError("correspondence: need at least one indicator and one entity");
  }
  if (role_boxes.size() != role_classes.size()) throw ShapeError("correspondence: indicator boxes/classes differ in count");
  if (entities.classes.size() != entities.size()) throw ShapeError("correspondence: entity boxes/classes differ in count");
  CorrespondenceMatrix m{Matrix(role_boxes.size(), entities.size()), role};
  for (std::size_t i = 0; i < role_boxes.size(); ++i) {
    for (std::size_t j = 0; j < entities.size(); ++j) {
      m.values(i, j) = d_loc(role_boxes[i], entities.boxes[j], eps) * cosine_sim(role_classes[i], entities.classes[j]);
    }
  }
  return m;
}

inline LinkIndex select_links(const CorrespondenceMatrix& m, std::size_t k) {
  if (k < 1 || k > m.values.cols()) {
    throw ArgumentError("select_links: top-k = " + std::to_string(k) + " must lie in [1, N_e = " +
                        std::to_string(m.values.cols()) + "]");
  }
  LinkIndex links{{}, m.role};
  links.indices.reserve(m.values.rows());
  for (std::size_t i = 0; i < m.values.rows(); ++i) links.indices.push_back(top_k_indices(m.values.row(i), k));
  return links;
}

// K * N_r candidates. Subject and object links are paired at equal rank:
// predicate i, rank a -> (R^s[i][a], R^o[i][a]). Output order is predicate
// major, rank minor.
inline std::vector<Triplet> assemble(const PredicateNodeSet& preds, const EntityNodeSet& entities,
                                     const AssembleOptions& opts = {}) {
  if (opts.top_k < 1 || opts.top_k > entities.size()) {
    throw ArgumentError("assemble: top-k = " + std::to_string(opts.top_k) + " must lie in [1, N_e = " +
                        std::to_string(entities.size()) + "]");
  }
  const auto rs = select_links(correspondence(preds.sub_boxes, preds.sub_classes, entities, Role::kSubject, opts.eps),
                               opts.top_k);
  const auto ro = select_links(correspondence(preds.obj_boxes, preds.obj_classes, entities, Role::kObject, opts.eps),
                               opts.top_k);
  std::vector<Triplet> out;
  out.reserve(preds.size() * opts.top_k);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t a = 0; a < opts.top_k; ++a) {
      Triplet t;
      t.pred_index = i;
      t.sub_index = rs.indices[i][a];
      t.obj_index = ro.indices[i][a];
      t.sub_box = entities.boxes[t.sub_index];
      t.sub_class = entities.classes[t.sub_index];
      t.obj_box = entities.boxes[t.obj_index];
      t.obj_class = entities.classes[t.obj_index];
      t.pred_class = preds.pred_classes[i];
      t.centers = preds.centers[i];
      t.score = triplet_score(t.sub_class, t.obj_class, t.pred_class);
      out.push_back(std::move(t));
    }
  }
  return out;
}

// Drops self-connected triplets, ranks by score (stable), keeps n_out.
inline std::vector<Triplet> postprocess(const std::vector<Triplet>& triplets, std::size_t n_out) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < triplets.size(); ++i)
    if (!triplets[i].self_connected()) keep.push_back(i);
  std::stable_sort(keep.begin(), keep.end(),
                   [&](std::size_t a, std::size_t b) { return triplets[a].score > triplets[b].score; });
  if (keep.size() > n_out) keep.resize(n_out);
  std::vector<Triplet> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(triplets[i]);
  return out;
}

}  // namespace sgtrkit
