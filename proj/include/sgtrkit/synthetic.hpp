#pragma once

// Seeded synthetic scenes with a planted answer, and random toy decoder
// weights. All randomness in the library lives here.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sgtrkit/decoder.hpp"
#include "sgtrkit/scene.hpp"

namespace sgtrkit {

inline constexpr const char* kGeneratorId = "std::mt19937_64+std::normal_distribution";

struct SyntheticOptions {
  std::uint64_t seed = 0;
  std::size_t n_entities = 4;
  std::size_t n_relations = 3;
  double noise = 0.0;  // std-dev applied to indicator boxes, centers and class vectors
  std::size_t num_entity_classes = 4;
  std::size_t num_predicate_classes = 3;
  std::size_t feature_dim = 8;
  std::size_t feature_rows = 6;  // rows of the z_p fixture
};

namespace detail {

// Probability `peak` on `label`, the rest spread evenly over the other entries
// (background included).
inline ProbVector peaked(std::size_t label, std::size_t num_classes, double peak = 0.7) {
  ProbVector p(num_classes + 1, (1.0 - peak) / static_cast<double>(num_classes));
  p[label] = peak;
  return p;
}

class Noise {
 public:
  Noise(std::mt19937_64& rng, double sigma) : rng_(rng), sigma_(sigma) {}

  double operator()() {
    if (sigma_ == 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma_)(rng_);
  }

  Box box(const Box& b) {
    const double cx = b.cx + (*this)(), cy = b.cy + (*this)(), w = b.w + (*this)(), h = b.h + (*this)();
    return {std::clamp(cx, 0.0, 1.0), std::clamp(cy, 0.0, 1.0), std::clamp(w, 0.01, 1.0), std::clamp(h, 0.01, 1.0)};
  }

  ProbVector probs(ProbVector p) {
    double sum = 0.0;
    for (double& v : p) {
      v += std::abs((*this)());
      sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
  }

  CenterPair centers(const CenterPair& c) {
    auto f = [&](double v) { return std::clamp(v + (*this)(), 0.0, 1.0); };
    const double xs = f(c.xs), ys = f(c.ys), xo = f(c.xo), yo = f(c.yo);
    return {xs, ys, xo, yo};
  }

 private:
  std::mt19937_64& rng_;
  double sigma_;
};

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace detail

// Entities are the GT entities themselves; predicate node i is relation i
// with its indicators, centers and class vectors perturbed by `noise`.
// meta.planted records, per predicate node, the entity pair it was built from.
inline SceneFixture gen_synthetic(const SyntheticOptions& opt) {
  const std::size_t ne = opt.n_entities;
  if (ne < 2) throw ArgumentError("gen_synthetic: need at least 2 entities");
  if (opt.n_relations < 1 || opt.n_relations > ne * (ne - 1)) {
    throw ArgumentError("gen_synthetic: " + std::to_string(opt.n_relations) + " relations do not fit " +
                        std::to_string(ne) + " entities (max " + std::to_string(ne * (ne - 1)) + ")");
  }
  if (opt.num_entity_classes == 0 || opt.num_predicate_classes == 0 || opt.feature_dim == 0) {
    throw ArgumentError("gen_synthetic: class counts and feature_dim must be positive");
  }
  if (!(opt.noise >= 0.0)) throw ArgumentError("gen_synthetic: noise must be nonnegative");

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> center(0.15, 0.85), extent(0.1, 0.4);
  std::uniform_int_distribution<std::size_t> ent_label(0, opt.num_entity_classes - 1);
  std::uniform_int_distribution<std::size_t> pred_label(0, opt.num_predicate_classes - 1);

  SceneFixture s;
  s.num_entity_classes = opt.num_entity_classes;
  s.num_predicate_classes = opt.num_predicate_classes;

  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < ne; ++i) {
    const double cx = center(rng), cy = center(rng), w = extent(rng), h = extent(rng);
    s.entities.boxes.push_back({cx, cy, w, h});
    labels.push_back(ent_label(rng));
    s.entities.classes.push_back(detail::peaked(labels.back(), opt.num_entity_classes));
  }
  s.entities.features = detail::random_matrix(rng, ne, opt.feature_dim, 1.0);
  s.z_p = detail::random_matrix(rng, opt.feature_rows, opt.feature_dim, 1.0);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < ne; ++a)
    for (std::size_t b = 0; b < ne; ++b)
      if (a != b) pairs.emplace_back(a, b);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  pairs.resize(opt.n_relations);

  detail::Noise noise(rng, opt.noise);
  PredicateNodeSet preds;
  nlohmann::json planted = nlohmann::json::array();
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto [si, oi] = pairs[r];
    GTRelation g{s.entities.boxes[si], labels[si], s.entities.boxes[oi], labels[oi], pred_label(rng)};
    s.gt.push_back(g);
    preds.pred_classes.push_back(noise.probs(detail::peaked(g.pred_label, opt.num_predicate_classes)));
    preds.centers.push_back(noise.centers(g.centers()));
    preds.sub_boxes.push_back(noise.box(g.sub_box));
    preds.sub_classes.push_back(noise.probs(s.entities.classes[si]));
    preds.obj_boxes.push_back(noise.box(g.obj_box));
    preds.obj_classes.push_back(noise.probs(s.entities.classes[oi]));
    planted.push_back({{"predicate", r}, {"subject", si}, {"object", oi}});
  }
  s.predicates = std::move(preds);
  s.meta = {{"image_id", "synthetic-" + std::to_string(opt.seed)},
            {"seed", opt.seed},
            {"generator", kGeneratorId},
            {"noise", opt.noise},
            {"planted", planted}};
  s.validate();
  return s;
}

// Gaussian weights scaled by 1/sqrt(d); FFN biases start at zero.
inline DecoderWeights random_decoder_weights(const ModelDims& dims, std::uint64_t seed) {
  if (dims.d == 0 || dims.heads == 0 || dims.d % dims.heads != 0) {
    throw ArgumentError("random_decoder_weights: heads must divide d");
  }
  std::mt19937_64 rng(seed);
  const std::size_t d = dims.d;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  auto attn = [&] {
    AttentionBlock b;
    b.heads = dims.heads;
    b.wq = detail::random_matrix(rng, d, d, s);
    b.wk = detail::random_matrix(rng, d, d, s);
    b.wv = detail::random_matrix(rng, d, d, s);
    b.wo = detail::random_matrix(rng, d, d, s);
    b.ffn_w1 = detail::random_matrix(rng, d, d, s);
    b.ffn_w2 = detail::random_matrix(rng, d, d, s);
    b.ffn_b1 = Matrix(1, d);
    b.ffn_b2 = Matrix(1, d);
    return b;
  };
  DecoderWeights w;
  w.q_init = detail::random_matrix(rng, dims.num_queries, d, 1.0);
  w.w_g = detail::random_matrix(rng, 4, d, 1.0);
  w.w_e = detail::random_matrix(rng, d, 3 * d, s);
  w.init_attn = attn();
  for (std::size_t l = 0; l < dims.layers; ++l) {
    DecoderLayerWeights lw;
    lw.predicate = {attn(), attn()};
    lw.subject = {attn(), attn()};
    lw.object = {attn(), attn()};
    lw.w_i = detail::random_matrix(rng, d, d, s);
    lw.w_p = detail::random_matrix(rng, d, d, s);
    w.layers.push_back(std::move(lw));
  }
  w.w_cls_pred = detail::random_matrix(rng, d, dims.num_predicate_classes + 1, s);
  w.w_reg_pred = detail::random_matrix(rng, d, 4, s);
  w.w_cls_ent = detail::random_matrix(rng, d, dims.num_entity_classes + 1, s);
  w.w_reg_ent = detail::random_matrix(rng, d, 4, s);
  return w;
}

}  // namespace sgtrkit
