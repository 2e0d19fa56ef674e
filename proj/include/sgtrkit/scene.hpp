#pragma once

// Scene fixture and run configuration: the inputs every CLI stage reads.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgtrkit/assembler.hpp"
#include "sgtrkit/losses.hpp"
#include "sgtrkit/matcher.hpp"
#include "sgtrkit/metrics.hpp"
#include "sgtrkit/nodes.hpp"

namespace sgtrkit {

struct SceneFixture {
  // Free-form metadata; must contain a string "image_id".
  nlohmann::json meta = nlohmann::json::object({{"image_id", "scene"}});
  std::size_t num_entity_classes = 0;
  std::size_t num_predicate_classes = 0;
  EntityNodeSet entities;
  std::optional<Matrix> z_p;                    // predicate-encoder features, rows x d
  std::optional<PredicateNodeSet> predicates;  // absent until decoded
  std::vector<GTRelation> gt;

  std::string image_id() const { return meta.value("image_id", std::string{}); }

  void validate() const {
    if (!meta.is_object() || !meta.contains("image_id") || !meta["image_id"].is_string()) {
      throw InvariantError("meta.image_id must be a string");
    }
    if (num_entity_classes == 0) throw InvariantError("num_entity_classes must be positive");
    if (num_predicate_classes == 0) throw InvariantError("num_predicate_classes must be positive");
    entities.validate("entities");
    for (std::size_t i = 0; i < entities.classes.size(); ++i) {
      if (entities.classes[i].size() != num_entity_classes + 1) {
        throw InvariantError("entities.classes[" + std::to_string(i) + "] has " +
                             std::to_string(entities.classes[i].size()) + " entries, expected num_entity_classes + 1 = " +
                             std::to_string(num_entity_classes + 1));
      }
    }
    if (z_p && !entities.features.empty() && z_p->cols() != entities.features.cols()) {
      throw InvariantError("z_p has " + std::to_string(z_p->cols()) + " columns but entity features have " +
                           std::to_string(entities.features.cols()));
    }
    if (predicates) {
      predicates->validate("predicates");
      for (std::size_t i = 0; i < predicates->size(); ++i) {
        const std::string idx = "[" + std::to_string(i) + "]";
        if (predicates->pred_classes[i].size() != num_predicate_classes + 1)
          throw InvariantError("predicates.pred_classes" + idx + " length differs from num_predicate_classes + 1");
        if (predicates->sub_classes[i].size() != num_entity_classes + 1)
          throw InvariantError("predicates.sub_classes" + idx + " length differs from num_entity_classes + 1");
        if (predicates->obj_classes[i].size() != num_entity_classes + 1)
          throw InvariantError("predicates.obj_classes" + idx + " length differs from num_entity_classes + 1");
      }
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const std::string p = "gt[" + std::to_string(i) + "]";
      check_box(gt[i].sub_box, p + ".sub_box");
      check_box(gt[i].obj_box, p + ".obj_box");
      if (gt[i].sub_label >= num_entity_classes) throw InvariantError(p + ".sub_label out of range");
      if (gt[i].obj_label >= num_entity_classes) throw InvariantError(p + ".obj_label out of range");
      if (gt[i].pred_label >= num_predicate_classes) throw InvariantError(p + ".pred_label out of range");
    }
  }

  friend bool operator==(const SceneFixture&, const SceneFixture&) = default;
};

struct ModelDims {
  std::size_t d = 8;
  std::size_t heads = 2;
  std::size_t layers = 2;
  std::size_t num_queries = 5;  // N_r; deployment value 150
  std::size_t num_entities = 4;
  std::size_t num_entity_classes = 4;
  std::size_t num_predicate_classes = 3;
};

struct RunConfig {
  std::size_t k_assemble = 3;         // test-time top-K links
  std::size_t k_assemble_train = 40;  // train-time top-K links
  std::size_t n_out = 100;
  CostWeights cost;
  double eps = kDefaultLocEpsilon;
  LossNormalization loss_normalization = LossNormalization::kSum;
  ModelDims model;
  EvalConfig eval;

  void validate() const {
    if (k_assemble == 0) throw ConfigError("k_assemble must be positive");
    if (k_assemble_train == 0) throw ConfigError("k_assemble_train must be positive");
    if (n_out == 0) throw ConfigError("n_out must be positive");
    const std::pair<const char*, double> weights[] = {{"lambda_p", cost.lambda_p}, {"lambda_e", cost.lambda_e},
                                                      {"w_giou", cost.w_giou},     {"w_l1", cost.w_l1},
                                                      {"w_cls", cost.w_cls}};
    for (const auto& [name, v] : weights) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be a nonnegative number");
    }
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be positive");
    const std::pair<const char*, std::size_t> counts[] = {
        {"model.d", model.d},
        {"model.heads", model.heads},
        {"model.num_queries", model.num_queries},
        {"model.num_entities", model.num_entities},
        {"model.num_entity_classes", model.num_entity_classes},
        {"model.num_predicate_classes", model.num_predicate_classes}};
    for (const auto& [name, v] : counts) {
      if (v == 0) throw ConfigError(std::string(name) + " must be positive");
    }
    if (model.d % model.heads != 0) throw ConfigError("model.heads must divide model.d");
    eval.validate();
  }
};

}  // namespace sgtrkit
