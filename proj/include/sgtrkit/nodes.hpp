#pragma once

// Entity and predicate node sets: the detector output and the predicate
// decoder output that graph assembling links together.

#include <cstddef>
#include <string>
#include <vector>

#include "sgtrkit/geometry.hpp"
#include "sgtrkit/matrix.hpp"
#include "sgtrkit/prob.hpp"

namespace sgtrkit {

struct EntityNodeSet {
  std::vector<Box> boxes;
  std::vector<ProbVector> classes;  // C_e + 1 entries each
  Matrix features;                  // N_e x d; may be empty when no decoder runs

  std::size_t size() const noexcept { return boxes.size(); }

  void validate(const std::string& where = "entities") const {
    if (boxes.empty()) throw InvariantError(where + ": at least one entity is required");
    if (classes.size() != boxes.size()) {
      throw InvariantError(where + ": " + std::to_string(boxes.size()) + " boxes but " +
                           std::to_string(classes.size()) + " class rows");
    }
    if (!features.empty() && features.rows() != boxes.size()) {
      throw InvariantError(where + ".features has " + std::to_string(features.rows()) + " rows, expected " +
                           std::to_string(boxes.size()));
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      check_box(boxes[i], where + ".boxes[" + std::to_string(i) + "]");
      check_prob_vector(classes[i], where + ".classes[" + std::to_string(i) + "]");
      if (classes[i].size() != classes.front().size()) {
        throw InvariantError(where + ".classes[" + std::to_string(i) + "] has inconsistent length");
      }
    }
  }

  friend bool operator==(const EntityNodeSet&, const EntityNodeSet&) = default;
};

struct PredicateNodeSet {
  std::vector<ProbVector> pred_classes;  // C_p + 1 entries each
  std::vector<CenterPair> centers;
  std::vector<Box> sub_boxes;
  std::vector<ProbVector> sub_classes;
  std::vector<Box> obj_boxes;
  std::vector<ProbVector> obj_classes;

  std::size_t size() const noexcept { return pred_classes.size(); }

  void validate(const std::string& where = "predicates") const {
    const std::size_t n = pred_classes.size();
    if (n == 0) throw InvariantError(where + ": at least one predicate node is required");
    auto check_len = [&](std::size_t len, const char* field) {
      if (len != n) {
        throw InvariantError(where + "." + field + " has " + std::to_string(len) + " rows, expected " +
                             std::to_string(n));
      }
    };
    check_len(centers.size(), "centers");
    check_len(sub_boxes.size(), "sub_boxes");
    check_len(sub_classes.size(), "sub_classes");
    check_len(obj_boxes.size(), "obj_boxes");
    check_len(obj_classes.size(), "obj_classes");
    for (std::size_t i = 0; i < n; ++i) {
      const std::string idx = "[" + std::to_string(i) + "]";
      check_prob_vector(pred_classes[i], where + ".pred_classes" + idx);
      check_center_pair(centers[i], where + ".centers" + idx);
      check_box(sub_boxes[i], where + ".sub_boxes" + idx);
      check_prob_vector(sub_classes[i], where + ".sub_classes" + idx);
      check_box(obj_boxes[i], where + ".obj_boxes" + idx);
      check_prob_vector(obj_classes[i], where + ".obj_classes" + idx);
    }
  }

  friend bool operator==(const PredicateNodeSet&, const PredicateNodeSet&) = default;
};

}  // namespace sgtrkit
