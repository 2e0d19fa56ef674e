#pragma once

// JSON interchange for every artifact the CLI reads or writes.
//
// Conventions: matrices are arrays of rows, boxes are [cx, cy, w, h], center
// pairs are [xs, ys, xo, yo], bias rows are flat arrays. Output is canonical:
// object keys sorted, two-space indent, floats with 17 significant digits.
// Readers report the JSON path of the first offending field.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgtrkit/assembler.hpp"
#include "sgtrkit/decoder.hpp"
#include "sgtrkit/error.hpp"
#include "sgtrkit/losses.hpp"
#include "sgtrkit/matcher.hpp"
#include "sgtrkit/metrics.hpp"
#include "sgtrkit/scene.hpp"

namespace sgtrkit::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical text

namespace detail {

inline void write_number(std::string& out, const json& j) {
  if (j.is_number_integer()) {
    out += j.is_number_unsigned() ? std::to_string(j.get<std::uint64_t>()) : std::to_string(j.get<std::int64_t>());
    return;
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError("cannot serialize a non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline void write_canonical(std::string& out, const json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + json(it.key()).dump() + ": ";
        write_canonical(out, it.value(), indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line so matrices read as rows.
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          write_canonical(out, j[i], indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        write_canonical(out, j[i], indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float:
      write_number(out, j);
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

inline std::string canonical_dump(const json& j) {
  std::string out;
  detail::write_canonical(out, j, 0);
  out += "\n";
  return out;
}

inline json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(source + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path + ": cannot open file");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_text(text, path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError(path + ": cannot open file for writing");
  out << text;
  if (!out) throw SchemaError(path + ": write failed");
}

// ---------------------------------------------------------------------------
// Field readers

namespace detail {

inline const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError((path.empty() ? std::string(key) : path + "." + key) + ": missing field");
  return *it;
}

inline std::string child(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }
inline std::string item(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& path) {
  if (!j.is_object()) throw SchemaError((path.empty() ? std::string("document") : path) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw SchemaError(child(path, it.key().c_str()) + ": unknown field");
  }
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path + ": not finite");
  return v;
}

inline std::size_t count(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::size_t>(j.get<std::int64_t>());
  throw SchemaError(path + ": expected a nonnegative integer");
}

inline const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path + ": expected an array");
  return j;
}

inline std::vector<double> vector(const json& j, const std::string& path) {
  array(j, path);
  std::vector<double> v;
  v.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], item(path, i)));
  return v;
}

inline std::array<double, 4> quad(const json& j, const std::string& path) {
  const auto v = vector(j, path);
  if (v.size() != 4) throw SchemaError(path + ": expected 4 numbers, got " + std::to_string(v.size()));
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitive types

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row_vector(i));
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& path) {
  detail::array(j, path);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    rows.push_back(detail::vector(j[i], detail::item(path, i)));
    if (rows.back().size() != rows.front().size()) {
      throw SchemaError(detail::item(path, i) + ": row length " + std::to_string(rows.back().size()) + " differs from " +
                        std::to_string(rows.front().size()));
    }
  }
  return Matrix::from_rows(rows);
}

// 1 x d row stored as a flat array.
inline json bias_to_json(const Matrix& m) { return m.rows() == 1 ? json(m.row_vector(0)) : to_json(m); }

inline Matrix bias_from_json(const json& j, const std::string& path) {
  const auto v = detail::vector(j, path);
  return Matrix(1, v.size(), v);
}

inline json to_json(const Box& b) { return json::array({b.cx, b.cy, b.w, b.h}); }

inline Box box_from_json(const json& j, const std::string& path) {
  const auto q = detail::quad(j, path);
  Box b{q[0], q[1], q[2], q[3]};
  check_box(b, path);
  return b;
}

inline json to_json(const CenterPair& c) { return json::array({c.xs, c.ys, c.xo, c.yo}); }

inline CenterPair center_pair_from_json(const json& j, const std::string& path) {
  const auto q = detail::quad(j, path);
  CenterPair c{q[0], q[1], q[2], q[3]};
  check_center_pair(c, path);
  return c;
}

inline ProbVector prob_from_json(const json& j, const std::string& path) {
  auto v = detail::vector(j, path);
  check_prob_vector(v, path);
  return v;
}

inline json to_json(const GTRelation& g);
inline json to_json(const Triplet& t);

namespace detail {

template <typename T, typename F>
std::vector<T> list(const json& j, const std::string& path, F&& each) {
  array(j, path);
  std::vector<T> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(each(j[i], item(path, i)));
  return out;
}

template <typename T>
json list_to_json(const std::vector<T>& v) {
  json a = json::array();
  for (const auto& e : v) a.push_back(to_json(e));
  return a;
}

inline json list_to_json(const std::vector<ProbVector>& v) {
  json a = json::array();
  for (const auto& e : v) a.push_back(e);
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Node sets

inline json to_json(const EntityNodeSet& e) {
  json j{{"boxes", detail::list_to_json(e.boxes)}, {"classes", detail::list_to_json(e.classes)}};
  if (!e.features.empty()) j["features"] = to_json(e.features);
  return j;
}

inline EntityNodeSet entities_from_json(const json& j, const std::string& path) {
  detail::reject_unknown(j, {"boxes", "classes", "features"}, path);
  EntityNodeSet e;
  e.boxes = detail::list<Box>(detail::field(j, "boxes", path), detail::child(path, "boxes"), box_from_json);
  e.classes = detail::list<ProbVector>(detail::field(j, "classes", path), detail::child(path, "classes"), prob_from_json);
  if (j.contains("features")) e.features = matrix_from_json(j["features"], detail::child(path, "features"));
  e.validate(path);
  return e;
}

inline json to_json(const PredicateNodeSet& p) {
  return json{{"pred_classes", detail::list_to_json(p.pred_classes)},
              {"centers", detail::list_to_json(p.centers)},
              {"sub_boxes", detail::list_to_json(p.sub_boxes)},
              {"sub_classes", detail::list_to_json(p.sub_classes)},
              {"obj_boxes", detail::list_to_json(p.obj_boxes)},
              {"obj_classes", detail::list_to_json(p.obj_classes)}};
}

inline PredicateNodeSet predicates_from_json(const json& j, const std::string& path) {
  using detail::child;
  using detail::field;
  detail::reject_unknown(j, {"pred_classes", "centers", "sub_boxes", "sub_classes", "obj_boxes", "obj_classes"}, path);
  PredicateNodeSet p;
  p.pred_classes = detail::list<ProbVector>(field(j, "pred_classes", path), child(path, "pred_classes"), prob_from_json);
  p.centers = detail::list<CenterPair>(field(j, "centers", path), child(path, "centers"), center_pair_from_json);
  p.sub_boxes = detail::list<Box>(field(j, "sub_boxes", path), child(path, "sub_boxes"), box_from_json);
  p.sub_classes = detail::list<ProbVector>(field(j, "sub_classes", path), child(path, "sub_classes"), prob_from_json);
  p.obj_boxes = detail::list<Box>(field(j, "obj_boxes", path), child(path, "obj_boxes"), box_from_json);
  p.obj_classes = detail::list<ProbVector>(field(j, "obj_classes", path), child(path, "obj_classes"), prob_from_json);
  p.validate(path);
  return p;
}

// ---------------------------------------------------------------------------
// GT, triplets, scene

inline json to_json(const GTRelation& g) {
  return json{{"sub_box", to_json(g.sub_box)},
              {"sub_label", g.sub_label},
              {"obj_box", to_json(g.obj_box)},
              {"obj_label", g.obj_label},
              {"pred_label", g.pred_label}};
}

inline GTRelation gt_from_json(const json& j, const std::string& path) {
  using detail::child;
  using detail::field;
  detail::reject_unknown(j, {"sub_box", "sub_label", "obj_box", "obj_label", "pred_label"}, path);
  GTRelation g;
  g.sub_box = box_from_json(field(j, "sub_box", path), child(path, "sub_box"));
  g.sub_label = detail::count(field(j, "sub_label", path), child(path, "sub_label"));
  g.obj_box = box_from_json(field(j, "obj_box", path), child(path, "obj_box"));
  g.obj_label = detail::count(field(j, "obj_label", path), child(path, "obj_label"));
  g.pred_label = detail::count(field(j, "pred_label", path), child(path, "pred_label"));
  return g;
}

inline json to_json(const Triplet& t) {
  return json{{"pred_index", t.pred_index},
              {"sub_index", t.sub_index},
              {"obj_index", t.obj_index},
              {"sub_box", to_json(t.sub_box)},
              {"sub_class", t.sub_class},
              {"obj_box", to_json(t.obj_box)},
              {"obj_class", t.obj_class},
              {"pred_class", t.pred_class},
              {"centers", to_json(t.centers)},
              {"score", t.score}};
}

inline Triplet triplet_from_json(const json& j, const std::string& path) {
  using detail::child;
  using detail::field;
  detail::reject_unknown(j, {"pred_index", "sub_index", "obj_index", "sub_box", "sub_class", "obj_box", "obj_class",
                             "pred_class", "centers", "score"},
                         path);
  Triplet t;
  t.pred_index = detail::count(field(j, "pred_index", path), child(path, "pred_index"));
  t.sub_index = detail::count(field(j, "sub_index", path), child(path, "sub_index"));
  t.obj_index = detail::count(field(j, "obj_index", path), child(path, "obj_index"));
  t.sub_box = box_from_json(field(j, "sub_box", path), child(path, "sub_box"));
  t.sub_class = prob_from_json(field(j, "sub_class", path), child(path, "sub_class"));
  t.obj_box = box_from_json(field(j, "obj_box", path), child(path, "obj_box"));
  t.obj_class = prob_from_json(field(j, "obj_class", path), child(path, "obj_class"));
  t.pred_class = prob_from_json(field(j, "pred_class", path), child(path, "pred_class"));
  t.centers = center_pair_from_json(field(j, "centers", path), child(path, "centers"));
  t.score = detail::number(field(j, "score", path), child(path, "score"));
  if (t.score < 0.0 || t.score > 1.0) throw InvariantError(child(path, "score") + " outside [0, 1]");
  return t;
}

struct TripletFile {
  std::string image_id;
  std::vector<Triplet> triplets;
  friend bool operator==(const TripletFile&, const TripletFile&) = default;
};

inline json to_json(const TripletFile& f) {
  return json{{"image_id", f.image_id}, {"triplets", detail::list_to_json(f.triplets)}};
}

inline TripletFile triplets_from_json(const json& j) {
  detail::reject_unknown(j, {"image_id", "triplets"}, "");
  TripletFile f;
  const auto& id = detail::field(j, "image_id", "");
  if (!id.is_string()) throw SchemaError("image_id: expected a string");
  f.image_id = id.get<std::string>();
  f.triplets = detail::list<Triplet>(detail::field(j, "triplets", ""), "triplets", triplet_from_json);
  return f;
}

inline json to_json(const SceneFixture& s) {
  json j{{"meta", s.meta},
         {"num_entity_classes", s.num_entity_classes},
         {"num_predicate_classes", s.num_predicate_classes},
         {"entities", to_json(s.entities)},
         {"gt", detail::list_to_json(s.gt)}};
  if (s.z_p) j["z_p"] = to_json(*s.z_p);
  if (s.predicates) j["predicates"] = to_json(*s.predicates);
  return j;
}

inline SceneFixture scene_from_json(const json& j) {
  detail::reject_unknown(j, {"meta", "num_entity_classes", "num_predicate_classes", "entities", "z_p", "predicates", "gt"},
                         "");
  SceneFixture s;
  s.meta = detail::field(j, "meta", "");
  s.num_entity_classes = detail::count(detail::field(j, "num_entity_classes", ""), "num_entity_classes");
  s.num_predicate_classes = detail::count(detail::field(j, "num_predicate_classes", ""), "num_predicate_classes");
  s.entities = entities_from_json(detail::field(j, "entities", ""), "entities");
  if (j.contains("z_p")) s.z_p = matrix_from_json(j["z_p"], "z_p");
  if (j.contains("predicates")) s.predicates = predicates_from_json(j["predicates"], "predicates");
  s.gt = detail::list<GTRelation>(detail::field(j, "gt", ""), "gt", gt_from_json);
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Decoder weights

inline json to_json(const AttentionBlock& b) {
  return json{{"heads", b.heads},           {"wq", to_json(b.wq)},
              {"wk", to_json(b.wk)},         {"wv", to_json(b.wv)},
              {"wo", to_json(b.wo)},         {"ffn_w1", to_json(b.ffn_w1)},
              {"ffn_b1", bias_to_json(b.ffn_b1)}, {"ffn_w2", to_json(b.ffn_w2)},
              {"ffn_b2", bias_to_json(b.ffn_b2)}};
}

inline AttentionBlock attention_from_json(const json& j, const std::string& path) {
  using detail::child;
  using detail::field;
  detail::reject_unknown(j, {"heads", "wq", "wk", "wv", "wo", "ffn_w1", "ffn_b1", "ffn_w2", "ffn_b2"}, path);
  AttentionBlock b;
  b.heads = detail::count(field(j, "heads", path), child(path, "heads"));
  b.wq = matrix_from_json(field(j, "wq", path), child(path, "wq"));
  b.wk = matrix_from_json(field(j, "wk", path), child(path, "wk"));
  b.wv = matrix_from_json(field(j, "wv", path), child(path, "wv"));
  b.wo = matrix_from_json(field(j, "wo", path), child(path, "wo"));
  b.ffn_w1 = matrix_from_json(field(j, "ffn_w1", path), child(path, "ffn_w1"));
  b.ffn_b1 = bias_from_json(field(j, "ffn_b1", path), child(path, "ffn_b1"));
  b.ffn_w2 = matrix_from_json(field(j, "ffn_w2", path), child(path, "ffn_w2"));
  b.ffn_b2 = bias_from_json(field(j, "ffn_b2", path), child(path, "ffn_b2"));
  return b;
}

inline json to_json(const SubDecoderWeights& s) {
  return json{{"self_attn", to_json(s.self_attn)}, {"cross_attn", to_json(s.cross_attn)}};
}

inline SubDecoderWeights sub_decoder_from_json(const json& j, const std::string& path) {
  detail::reject_unknown(j, {"self_attn", "cross_attn"}, path);
  return {attention_from_json(detail::field(j, "self_attn", path), detail::child(path, "self_attn")),
          attention_from_json(detail::field(j, "cross_attn", path), detail::child(path, "cross_attn"))};
}

inline json to_json(const DecoderWeights& w) {
  json layers = json::array();
  for (const auto& l : w.layers) {
    layers.push_back(json{{"predicate", to_json(l.predicate)},
                          {"subject", to_json(l.subject)},
                          {"object", to_json(l.object)},
                          {"w_i", to_json(l.w_i)},
                          {"w_p", to_json(l.w_p)}});
  }
  return json{{"q_init", to_json(w.q_init)},         {"w_g", to_json(w.w_g)},
              {"w_e", to_json(w.w_e)},               {"init_attn", to_json(w.init_attn)},
              {"layers", layers},                    {"w_cls_pred", to_json(w.w_cls_pred)},
              {"w_reg_pred", to_json(w.w_reg_pred)}, {"w_cls_ent", to_json(w.w_cls_ent)},
              {"w_reg_ent", to_json(w.w_reg_ent)}};
}

inline DecoderWeights weights_from_json(const json& j) {
  using detail::field;
  detail::reject_unknown(j, {"q_init", "w_g", "w_e", "init_attn", "layers", "w_cls_pred", "w_reg_pred", "w_cls_ent",
                             "w_reg_ent"},
                         "");
  DecoderWeights w;
  w.q_init = matrix_from_json(field(j, "q_init", ""), "q_init");
  w.w_g = matrix_from_json(field(j, "w_g", ""), "w_g");
  w.w_e = matrix_from_json(field(j, "w_e", ""), "w_e");
  w.init_attn = attention_from_json(field(j, "init_attn", ""), "init_attn");
  const auto& layers = detail::array(field(j, "layers", ""), "layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = detail::item("layers", l);
    detail::reject_unknown(layers[l], {"predicate", "subject", "object", "w_i", "w_p"}, p);
    DecoderLayerWeights lw;
    lw.predicate = sub_decoder_from_json(field(layers[l], "predicate", p), p + ".predicate");
    lw.subject = sub_decoder_from_json(field(layers[l], "subject", p), p + ".subject");
    lw.object = sub_decoder_from_json(field(layers[l], "object", p), p + ".object");
    lw.w_i = matrix_from_json(field(layers[l], "w_i", p), p + ".w_i");
    lw.w_p = matrix_from_json(field(layers[l], "w_p", p), p + ".w_p");
    w.layers.push_back(std::move(lw));
  }
  w.w_cls_pred = matrix_from_json(field(j, "w_cls_pred", ""), "w_cls_pred");
  w.w_reg_pred = matrix_from_json(field(j, "w_reg_pred", ""), "w_reg_pred");
  w.w_cls_ent = matrix_from_json(field(j, "w_cls_ent", ""), "w_cls_ent");
  w.w_reg_ent = matrix_from_json(field(j, "w_reg_ent", ""), "w_reg_ent");
  w.validate();
  return w;
}

// ---------------------------------------------------------------------------
// Match, loss, report

struct MatchFile {
  std::string image_id;
  MatchAssignment match;
  // Per-pair breakdown in GT order.
  struct Pair {
    std::size_t gt = 0;
    std::size_t triplet = 0;
    std::size_t pred_index = 0;
    double cost = 0.0;
    double predicate_cost = 0.0;
    double entity_cost = 0.0;
    friend bool operator==(const Pair&, const Pair&) = default;
  };
  std::vector<Pair> pairs;
  friend bool operator==(const MatchFile&, const MatchFile&) = default;
};

inline json to_json(const MatchFile& m) {
  json pairs = json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back(json{{"gt", p.gt},
                         {"triplet", p.triplet},
                         {"pred_index", p.pred_index},
                         {"cost", p.cost},
                         {"predicate_cost", p.predicate_cost},
                         {"entity_cost", p.entity_cost}});
  }
  return json{{"image_id", m.image_id},
              {"gt_to_pred", m.match.gt_to_pred},
              {"total_cost", m.match.total_cost},
              {"pairs", pairs}};
}

inline MatchFile match_from_json(const json& j) {
  using detail::field;
  detail::reject_unknown(j, {"image_id", "gt_to_pred", "total_cost", "pairs"}, "");
  MatchFile m;
  const auto& id = field(j, "image_id", "");
  if (!id.is_string()) throw SchemaError("image_id: expected a string");
  m.image_id = id.get<std::string>();
  m.match.gt_to_pred = detail::list<std::size_t>(field(j, "gt_to_pred", ""), "gt_to_pred", detail::count);
  m.match.total_cost = detail::number(field(j, "total_cost", ""), "total_cost");
  const auto& pairs = detail::array(field(j, "pairs", ""), "pairs");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string p = detail::item("pairs", i);
    detail::reject_unknown(pairs[i], {"gt", "triplet", "pred_index", "cost", "predicate_cost", "entity_cost"}, p);
    MatchFile::Pair pr;
    pr.gt = detail::count(field(pairs[i], "gt", p), p + ".gt");
    pr.triplet = detail::count(field(pairs[i], "triplet", p), p + ".triplet");
    pr.pred_index = detail::count(field(pairs[i], "pred_index", p), p + ".pred_index");
    pr.cost = detail::number(field(pairs[i], "cost", p), p + ".cost");
    pr.predicate_cost = detail::number(field(pairs[i], "predicate_cost", p), p + ".predicate_cost");
    pr.entity_cost = detail::number(field(pairs[i], "entity_cost", p), p + ".entity_cost");
    m.pairs.push_back(pr);
  }
  return m;
}

inline const char* to_string(LossNormalization n) noexcept { return n == LossNormalization::kSum ? "sum" : "mean"; }

inline json loss_to_json(const LossReport& r, const std::string& image_id, LossNormalization norm) {
  return json{{"image_id", image_id},
              {"normalization", to_string(norm)},
              {"l_pre", r.l_pre()},
              {"l_pre_p", r.l_pre_p},
              {"l_pre_i", r.l_pre_i},
              {"terms",
               {{"pred_center_l1", r.pred_center_l1},
                {"pred_ce", r.pred_ce},
                {"ent_loc_l1_s", r.ent_loc_l1_s},
                {"ent_loc_l1_o", r.ent_loc_l1_o},
                {"ent_loc_giou_s", r.ent_loc_giou_s},
                {"ent_loc_giou_o", r.ent_loc_giou_o},
                {"ent_ce_s", r.ent_ce_s},
                {"ent_ce_o", r.ent_ce_o}}}};
}

inline LossReport loss_from_json(const json& j) {
  using detail::field;
  const auto& t = field(j, "terms", "");
  auto term = [&](const char* k) { return detail::number(field(t, k, "terms"), std::string("terms.") + k); };
  LossReport r;
  r.pred_center_l1 = term("pred_center_l1");
  r.pred_ce = term("pred_ce");
  r.ent_loc_l1_s = term("ent_loc_l1_s");
  r.ent_loc_l1_o = term("ent_loc_l1_o");
  r.ent_loc_giou_s = term("ent_loc_giou_s");
  r.ent_loc_giou_o = term("ent_loc_giou_o");
  r.ent_ce_s = term("ent_ce_s");
  r.ent_ce_o = term("ent_ce_o");
  r.l_pre_p = detail::number(field(j, "l_pre_p", ""), "l_pre_p");
  r.l_pre_i = detail::number(field(j, "l_pre_i", ""), "l_pre_i");
  return r;
}

inline json to_json(const RecallByK& r) {
  json j = json::object();
  for (const auto& [k, v] : r) j[std::to_string(k)] = v;
  return j;
}

inline json to_json(const EvalReport& r, std::size_t num_images) {
  json per_pred = json::object(), groups = json::object();
  for (const auto& [k, classes] : r.per_predicate_recall) {
    json c = json::object();
    for (const auto& [cls, v] : classes) c[std::to_string(cls)] = v;
    per_pred[std::to_string(k)] = c;
  }
  for (const auto& [k, gs] : r.group_recall) {
    json g = json::object();
    for (const auto& [name, v] : gs) g[name] = v;
    groups[std::to_string(k)] = g;
  }
  json j{{"num_images", num_images},
         {"recall_at", to_json(r.recall_at)},
         {"mean_recall_at", to_json(r.mean_recall_at)},
         {"per_predicate_recall", per_pred},
         {"group_recall", groups}};
  if (r.zero_shot_recall_at) j["zero_shot_recall_at"] = to_json(*r.zero_shot_recall_at);
  return j;
}

// ---------------------------------------------------------------------------
// Run configuration

inline json to_json(const EvalConfig& c) {
  json groups = json::object();
  for (const auto& [cls, g] : c.predicate_groups) groups[std::to_string(cls)] = g;
  json j{{"ks", c.ks}, {"iou_threshold", c.iou_threshold}, {"predicate_groups", groups}};
  if (c.zero_shot_combos) {
    json combos = json::array();
    for (const auto& combo : *c.zero_shot_combos) combos.push_back(combo);
    j["zero_shot_combos"] = combos;
  }
  return j;
}

inline EvalConfig eval_config_from_json(const json& j, const std::string& path) {
  using detail::child;
  if (!j.is_object()) throw SchemaError(path + ": expected an object");
  detail::reject_unknown(j, {"ks", "iou_threshold", "predicate_groups", "zero_shot_combos"}, path);
  EvalConfig c;
  if (j.contains("ks")) c.ks = detail::list<std::size_t>(j["ks"], child(path, "ks"), detail::count);
  if (j.contains("iou_threshold")) c.iou_threshold = detail::number(j["iou_threshold"], child(path, "iou_threshold"));
  if (j.contains("predicate_groups")) {
    const auto& g = j["predicate_groups"];
    if (!g.is_object()) throw SchemaError(child(path, "predicate_groups") + ": expected an object");
    for (auto it = g.begin(); it != g.end(); ++it) {
      const std::string p = child(path, "predicate_groups") + "." + it.key();
      std::size_t cls = 0;
      try {
        std::size_t used = 0;
        cls = std::stoul(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw SchemaError(p + ": key must be a predicate class index");
      }
      if (!it.value().is_string()) throw SchemaError(p + ": expected \"head\", \"body\" or \"tail\"");
      c.predicate_groups[cls] = it.value().get<std::string>();
    }
  }
  if (j.contains("zero_shot_combos")) {
    std::set<LabelCombo> combos;
    const std::string p = child(path, "zero_shot_combos");
    const auto& a = detail::array(j["zero_shot_combos"], p);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& e = detail::array(a[i], detail::item(p, i));
      if (e.size() != 3) throw SchemaError(detail::item(p, i) + ": expected [sub_label, pred_label, obj_label]");
      combos.insert({detail::count(e[0], detail::item(p, i) + "[0]"), detail::count(e[1], detail::item(p, i) + "[1]"),
                     detail::count(e[2], detail::item(p, i) + "[2]")});
    }
    c.zero_shot_combos = std::move(combos);
  }
  c.validate();
  return c;
}

inline json to_json(const RunConfig& c) {
  return json{{"k_assemble", c.k_assemble},
              {"k_assemble_train", c.k_assemble_train},
              {"n_out", c.n_out},
              {"lambda_p", c.cost.lambda_p},
              {"lambda_e", c.cost.lambda_e},
              {"w_giou", c.cost.w_giou},
              {"w_l1", c.cost.w_l1},
              {"w_cls", c.cost.w_cls},
              {"eps", c.eps},
              {"loss_normalization", to_string(c.loss_normalization)},
              {"model",
               {{"d", c.model.d},
                {"heads", c.model.heads},
                {"layers", c.model.layers},
                {"num_queries", c.model.num_queries},
                {"num_entities", c.model.num_entities},
                {"num_entity_classes", c.model.num_entity_classes},
                {"num_predicate_classes", c.model.num_predicate_classes}}},
              {"eval", to_json(c.eval)}};
}

// Every field is optional; missing fields keep their defaults.
inline RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("config: expected an object");
  detail::reject_unknown(j, {"k_assemble", "k_assemble_train", "n_out", "lambda_p", "lambda_e", "w_giou", "w_l1",
                             "w_cls", "eps", "loss_normalization", "model", "eval"},
                         "");
  RunConfig c;
  auto opt_count = [&](const json& obj, const char* key, std::size_t& dst, const std::string& path) {
    if (obj.contains(key)) dst = detail::count(obj[key], detail::child(path, key));
  };
  auto opt_number = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = detail::number(j[key], key);
  };
  opt_count(j, "k_assemble", c.k_assemble, "");
  opt_count(j, "k_assemble_train", c.k_assemble_train, "");
  opt_count(j, "n_out", c.n_out, "");
  opt_number("lambda_p", c.cost.lambda_p);
  opt_number("lambda_e", c.cost.lambda_e);
  opt_number("w_giou", c.cost.w_giou);
  opt_number("w_l1", c.cost.w_l1);
  opt_number("w_cls", c.cost.w_cls);
  opt_number("eps", c.eps);
  if (j.contains("loss_normalization")) {
    const auto& n = j["loss_normalization"];
    if (n == "sum") {
      c.loss_normalization = LossNormalization::kSum;
    } else if (n == "mean") {
      c.loss_normalization = LossNormalization::kMean;
    } else {
      throw SchemaError("loss_normalization: expected \"sum\" or \"mean\"");
    }
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    if (!m.is_object()) throw SchemaError("model: expected an object");
    detail::reject_unknown(m, {"d", "heads", "layers", "num_queries", "num_entities", "num_entity_classes",
                               "num_predicate_classes"},
                           "model");
    opt_count(m, "d", c.model.d, "model");
    opt_count(m, "heads", c.model.heads, "model");
    opt_count(m, "layers", c.model.layers, "model");
    opt_count(m, "num_queries", c.model.num_queries, "model");
    opt_count(m, "num_entities", c.model.num_entities, "model");
    opt_count(m, "num_entity_classes", c.model.num_entity_classes, "model");
    opt_count(m, "num_predicate_classes", c.model.num_predicate_classes, "model");
  }
  if (j.contains("eval")) c.eval = eval_config_from_json(j["eval"], "eval");
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// File-level loaders; diagnostics are prefixed with the file path.

template <typename F>
auto load_file(const std::string& path, F&& from_json) {
  const json j = read_json_file(path);
  try {
    return from_json(j);
  } catch (const Error& e) {
    if (dynamic_cast<const InvariantError*>(&e)) throw InvariantError(path + ": " + e.what());
    if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(path + ": " + e.what());
    if (dynamic_cast<const ShapeError*>(&e)) throw ShapeError(path + ": " + e.what());
    throw SchemaError(path + ": " + e.what());
  }
}

inline SceneFixture load_scene(const std::string& path) { return load_file(path, scene_from_json); }
inline DecoderWeights load_weights(const std::string& path) { return load_file(path, weights_from_json); }
inline RunConfig load_config(const std::string& path) { return load_file(path, run_config_from_json); }
inline TripletFile load_triplets(const std::string& path) { return load_file(path, triplets_from_json); }
inline MatchFile load_match(const std::string& path) { return load_file(path, match_from_json); }

}  // namespace sgtrkit::io
