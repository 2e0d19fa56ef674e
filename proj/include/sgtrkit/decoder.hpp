#pragma once

// Forward-only predicate node generator at toy scale.
//
//   G_e   = ReLU(B_e W_g)
//   Q^e_p = A(Q_init, H_e + G_e, H_e + G_e) W_e            -> (Q_is, Q_io, Q_p)
//   per layer:
//     Q~_p  = A(Q_p,  Z_p, Z_p)
//     Q~_is = A(Q_is, H_e, H_e),  Q~_io = A(Q_io, H_e, H_e)
//     Q_p  <- (Q~_p + (Q~_is + Q~_io) W_i) W_p,  Q_is <- Q~_is,  Q_io <- Q~_io
//   heads:
//     P_p = softmax(Q_p W_cls^p), B_p = sigmoid(Q_p W_reg^p)
//     P_s/P_o, B_s/B_o from Q_is/Q_io with the entity heads
//
// A(q, k, v) is multi-head scaled dot-product attention followed by a one
// hidden layer ReLU feed-forward block with a residual around it. Each
// sub-decoder runs self-attention over its queries before cross-attention.
// No positional encodings and no layer norm.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sgtrkit/matrix.hpp"
#include "sgtrkit/nodes.hpp"

namespace sgtrkit {

struct AttentionBlock {
  std::size_t heads = 1;
  Matrix wq, wk, wv, wo;  // d x d
  Matrix ffn_w1, ffn_w2;  // d x d
  Matrix ffn_b1, ffn_b2;  // 1 x d

  std::size_t dim() const noexcept { return wq.rows(); }

  // Identity projections and an all-zero FFN, so A(q, k, v) = MHA(q, k, v).
  static AttentionBlock identity(std::size_t d, std::size_t heads = 1) {
    AttentionBlock b;
    b.heads = heads;
    b.wq = b.wk = b.wv = b.wo = Matrix::identity(d);
    b.ffn_w1 = b.ffn_w2 = Matrix(d, d);
    b.ffn_b1 = b.ffn_b2 = Matrix(1, d);
    return b;
  }

  void validate(std::size_t d, const std::string& where) const {
    if (heads == 0 || d % heads != 0) {
      throw ShapeError(where + ": head count " + std::to_string(heads) + " does not divide d = " + std::to_string(d));
    }
    auto square = [&](const Matrix& m, const char* name) {
      if (m.rows() != d || m.cols() != d) {
        throw ShapeError(where + "." + name + " is " + m.shape_string() + ", expected " + std::to_string(d) + "x" +
                         std::to_string(d));
      }
    };
    auto bias = [&](const Matrix& m, const char* name) {
      if (m.rows() != 1 || m.cols() != d) {
        throw ShapeError(where + "." + name + " is " + m.shape_string() + ", expected 1x" + std::to_string(d));
      }
    };
    square(wq, "wq");
    square(wk, "wk");
    square(wv, "wv");
    square(wo, "wo");
    square(ffn_w1, "ffn_w1");
    square(ffn_w2, "ffn_w2");
    bias(ffn_b1, "ffn_b1");
    bias(ffn_b2, "ffn_b2");
  }

  friend bool operator==(const AttentionBlock&, const AttentionBlock&) = default;
};

struct SubDecoderWeights {
  AttentionBlock self_attn;
  AttentionBlock cross_attn;
  friend bool operator==(const SubDecoderWeights&, const SubDecoderWeights&) = default;
};

struct DecoderLayerWeights {
  SubDecoderWeights predicate;
  SubDecoderWeights subject;
  SubDecoderWeights object;
  Matrix w_i;  // d x d, indicator fusion
  Matrix w_p;  // d x d, predicate update
  friend bool operator==(const DecoderLayerWeights&, const DecoderLayerWeights&) = default;
};

struct DecoderWeights {
  Matrix q_init;  // N_r x d
  Matrix w_g;     // 4 x d
  Matrix w_e;     // d x 3d = [W_e^is | W_e^io | W_e^p]
  AttentionBlock init_attn;
  std::vector<DecoderLayerWeights> layers;
  Matrix w_cls_pred;  // d x (C_p + 1)
  Matrix w_reg_pred;  // d x 4
  Matrix w_cls_ent;   // d x (C_e + 1)
  Matrix w_reg_ent;   // d x 4

  std::size_t dim() const noexcept { return w_g.cols(); }
  std::size_t num_queries() const noexcept { return q_init.rows(); }

  void validate() const {
    const std::size_t d = dim();
    if (d == 0) throw ShapeError("weights.w_g must be 4xd with d >= 1");
    auto expect = [&](const Matrix& m, std::size_t r, std::size_t c, const std::string& name) {
      if (m.rows() != r || m.cols() != c) {
        throw ShapeError("weights." + name + " is " + m.shape_string() + ", expected " + std::to_string(r) + "x" +
                         std::to_string(c));
      }
    };
    if (q_init.rows() == 0) throw ShapeError("weights.q_init needs at least one query row");
    expect(q_init, q_init.rows(), d, "q_init");
    expect(w_g, 4, d, "w_g");
    expect(w_e, d, 3 * d, "w_e");
    init_attn.validate(d, "weights.init_attn");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "weights.layers[" + std::to_string(l) + "]";
      layers[l].predicate.self_attn.validate(d, p + ".predicate.self_attn");
      layers[l].predicate.cross_attn.validate(d, p + ".predicate.cross_attn");
      layers[l].subject.self_attn.validate(d, p + ".subject.self_attn");
      layers[l].subject.cross_attn.validate(d, p + ".subject.cross_attn");
      layers[l].object.self_attn.validate(d, p + ".object.self_attn");
      layers[l].object.cross_attn.validate(d, p + ".object.cross_attn");
      expect(layers[l].w_i, d, d, "layers[" + std::to_string(l) + "].w_i");
      expect(layers[l].w_p, d, d, "layers[" + std::to_string(l) + "].w_p");
    }
    if (w_cls_pred.cols() < 2) throw ShapeError("weights.w_cls_pred needs at least 2 output classes");
    if (w_cls_ent.cols() < 2) throw ShapeError("weights.w_cls_ent needs at least 2 output classes");
    expect(w_cls_pred, d, w_cls_pred.cols(), "w_cls_pred");
    expect(w_reg_pred, d, 4, "w_reg_pred");
    expect(w_cls_ent, d, w_cls_ent.cols(), "w_cls_ent");
    expect(w_reg_ent, d, 4, "w_reg_ent");
  }

  friend bool operator==(const DecoderWeights&, const DecoderWeights&) = default;
};

struct PredicateQueryState {
  Matrix q_is;
  Matrix q_io;
  Matrix q_p;
  std::size_t layer = 0;
  friend bool operator==(const PredicateQueryState&, const PredicateQueryState&) = default;
};

// G_e = ReLU(B_e W_g), one row per box.
inline Matrix geometric_embed(const std::vector<Box>& boxes, const Matrix& w_g) {
  if (w_g.rows() != 4) throw ShapeError("geometric_embed: w_g is " + w_g.shape_string() + ", expected 4xd");
  Matrix b(boxes.size(), 4);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto a = boxes[i].as_array();
    std::copy(a.begin(), a.end(), b.row(i).begin());
  }
  return relu(matmul(b, w_g));
}

// Per-head softmax(Q_h K_h^T / sqrt(d / heads)); each matrix is N_q x N_k.
inline std::vector<Matrix> attention_weights(const Matrix& q, const Matrix& k, const AttentionBlock& p) {
  const std::size_t d = p.dim();
  if (q.cols() != d || k.cols() != d) {
    throw ShapeError("attention: q " + q.shape_string() + " / k " + k.shape_string() + " vs d = " + std::to_string(d));
  }
  if (p.heads == 0 || d % p.heads != 0) throw ShapeError("attention: heads must divide d");
  if (k.rows() == 0) throw ShapeError("attention: no keys");
  const std::size_t dh = d / p.heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Matrix qp = matmul(q, p.wq);
  const Matrix kp = matmul(k, p.wk);
  std::vector<Matrix> out;
  out.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) {
    const Matrix qh = column_block(qp, h * dh, dh);
    const Matrix kh = column_block(kp, h * dh, dh);
    out.push_back(softmax_rows(scale(matmul(qh, transpose(kh)), inv_scale)));
  }
  return out;
}

// A(q, k, v) = FFN(MHA(q, k, v)) with FFN(x) = x + ReLU(x W1 + b1) W2 + b2.
inline Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionBlock& p) {
  p.validate(p.dim(), "attention");
  if (k.rows() != v.rows()) {
    throw ShapeError("attention: " + std::to_string(k.rows()) + " keys but " + std::to_string(v.rows()) + " values");
  }
  if (v.cols() != p.dim()) throw ShapeError("attention: v " + v.shape_string() + " vs d = " + std::to_string(p.dim()));
  const auto weights = attention_weights(q, k, p);
  const std::size_t dh = p.dim() / p.heads;
  const Matrix vp = matmul(v, p.wv);
  std::vector<Matrix> heads;
  heads.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) heads.push_back(matmul(weights[h], column_block(vp, h * dh, dh)));
  const Matrix mha = matmul(hconcat(heads), p.wo);
  const Matrix hidden = relu(add_row_broadcast(matmul(mha, p.ffn_w1), p.ffn_b1));
  return add(mha, add_row_broadcast(matmul(hidden, p.ffn_w2), p.ffn_b2));
}

// Self-attention over the queries, then cross-attention into `memory`.
inline Matrix run_sub_decoder(const Matrix& queries, const Matrix& memory, const SubDecoderWeights& w) {
  const Matrix self = multi_head_attention(queries, queries, queries, w.self_attn);
  return multi_head_attention(self, memory, memory, w.cross_attn);
}

inline PredicateQueryState init_predicate_queries(const Matrix& q_init, const EntityNodeSet& entities,
                                                  const DecoderWeights& w) {
  const std::size_t d = w.dim();
  if (entities.features.rows() != entities.size() || entities.features.cols() != d) {
    throw ShapeError("init_predicate_queries: entity features " + entities.features.shape_string() + ", expected " +
                     std::to_string(entities.size()) + "x" + std::to_string(d));
  }
  if (q_init.cols() != d) throw ShapeError("init_predicate_queries: q_init " + q_init.shape_string());
  if (w.w_e.rows() != d || w.w_e.cols() != 3 * d) throw ShapeError("init_predicate_queries: w_e " + w.w_e.shape_string());
  const Matrix kv = add(entities.features, geometric_embed(entities.boxes, w.w_g));
  const Matrix q = matmul(multi_head_attention(q_init, kv, kv, w.init_attn), w.w_e);
  return {column_block(q, 0, d), column_block(q, d, d), column_block(q, 2 * d, d), 0};
}

inline PredicateQueryState decoder_layer(const PredicateQueryState& state, const Matrix& z_p, const Matrix& h_e,
                                         const DecoderLayerWeights& w) {
  const std::size_t n = state.q_p.rows();
  if (state.q_is.rows() != n || state.q_io.rows() != n || state.q_is.cols() != state.q_p.cols() ||
      state.q_io.cols() != state.q_p.cols()) {
    throw ShapeError("decoder_layer: inconsistent query blocks");
  }
  const Matrix pred = run_sub_decoder(state.q_p, z_p, w.predicate);
  const Matrix sub = run_sub_decoder(state.q_is, h_e, w.subject);
  const Matrix obj = run_sub_decoder(state.q_io, h_e, w.object);
  PredicateQueryState next;
  next.q_p = matmul(add(pred, matmul(add(sub, obj), w.w_i)), w.w_p);
  next.q_is = sub;
  next.q_io = obj;
  next.layer = state.layer + 1;
  return next;
}

inline PredicateNodeSet predict_heads(const PredicateQueryState& state, const DecoderWeights& w) {
  const Matrix pred_cls = softmax_rows(matmul(state.q_p, w.w_cls_pred));
  const Matrix centers = sigmoid(matmul(state.q_p, w.w_reg_pred));
  const Matrix sub_cls = softmax_rows(matmul(state.q_is, w.w_cls_ent));
  const Matrix sub_box = sigmoid(matmul(state.q_is, w.w_reg_ent));
  const Matrix obj_cls = softmax_rows(matmul(state.q_io, w.w_cls_ent));
  const Matrix obj_box = sigmoid(matmul(state.q_io, w.w_reg_ent));
  if (centers.cols() != 4 || sub_box.cols() != 4) throw ShapeError("predict_heads: regression heads must emit 4 values");

  PredicateNodeSet out;
  const std::size_t n = state.q_p.rows();
  for (std::size_t i = 0; i < n; ++i) {
    out.pred_classes.push_back(pred_cls.row_vector(i));
    out.centers.push_back({centers(i, 0), centers(i, 1), centers(i, 2), centers(i, 3)});
    out.sub_classes.push_back(sub_cls.row_vector(i));
    out.sub_boxes.push_back({sub_box(i, 0), sub_box(i, 1), sub_box(i, 2), sub_box(i, 3)});
    out.obj_classes.push_back(obj_cls.row_vector(i));
    out.obj_boxes.push_back({obj_box(i, 0), obj_box(i, 1), obj_box(i, 2), obj_box(i, 3)});
  }
  return out;
}

// Full forward pass: query initialization, every layer, then the heads.
inline PredicateNodeSet decode(const DecoderWeights& w, const EntityNodeSet& entities, const Matrix& z_p) {
  w.validate();
  if (z_p.cols() != w.dim() || z_p.rows() == 0) {
    throw ShapeError("decode: z_p is " + z_p.shape_string() + ", expected Nx" + std::to_string(w.dim()));
  }
  PredicateQueryState state = init_predicate_queries(w.q_init, entities, w);
  for (const auto& layer : w.layers) state = decoder_layer(state, z_p, entities.features, layer);
  return predict_heads(state, w);
}

}  // namespace sgtrkit
