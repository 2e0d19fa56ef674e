#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "sgtrkit/decoder.hpp"
#include "sgtrkit/synthetic.hpp"

using namespace sgtrkit;

namespace {

Matrix gaussian(std::mt19937_64& rng, std::size_t r, std::size_t c, double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  Matrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

oracle::Mat nested(const Matrix& m) {
  oracle::Mat out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m.row_vector(i);
  return out;
}

AttentionBlock random_block(std::mt19937_64& rng, std::size_t d, std::size_t heads) {
  AttentionBlock b;
  b.heads = heads;
  b.wq = gaussian(rng, d, d, 0.5);
  b.wk = gaussian(rng, d, d, 0.5);
  b.wv = gaussian(rng, d, d, 0.5);
  b.wo = gaussian(rng, d, d, 0.5);
  b.ffn_w1 = gaussian(rng, d, d, 0.5);
  b.ffn_w2 = gaussian(rng, d, d, 0.5);
  b.ffn_b1 = gaussian(rng, 1, d, 0.1);
  b.ffn_b2 = gaussian(rng, 1, d, 0.1);
  return b;
}

// Single-head attention plus FFN residual, written out with nested loops.
oracle::Mat ref_attention(const oracle::Mat& q, const oracle::Mat& k, const oracle::Mat& v, const AttentionBlock& b) {
  const auto qp = oracle::matmul(q, nested(b.wq));
  const auto kp = oracle::matmul(k, nested(b.wk));
  const auto vp = oracle::matmul(v, nested(b.wv));
  const double sc = 1.0 / std::sqrt(static_cast<double>(q[0].size()));
  oracle::Mat mixed(q.size(), std::vector<double>(q[0].size(), 0.0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<double> s(k.size(), 0.0);
    for (std::size_t j = 0; j < k.size(); ++j)
      for (std::size_t t = 0; t < qp[i].size(); ++t) s[j] += qp[i][t] * kp[j][t] * sc;
    const auto w = oracle::softmax(s);
    for (std::size_t j = 0; j < k.size(); ++j)
      for (std::size_t t = 0; t < vp[j].size(); ++t) mixed[i][t] += w[j] * vp[j][t];
  }
  const auto mha = oracle::matmul(mixed, nested(b.wo));
  auto hidden = oracle::matmul(mha, nested(b.ffn_w1));
  for (auto& row : hidden)
    for (std::size_t t = 0; t < row.size(); ++t) row[t] = std::max(0.0, row[t] + b.ffn_b1(0, t));
  auto out = oracle::matmul(hidden, nested(b.ffn_w2));
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t t = 0; t < out[i].size(); ++t) out[i][t] += b.ffn_b2(0, t) + mha[i][t];
  return out;
}

DecoderLayerWeights random_layer(std::mt19937_64& rng, std::size_t d, std::size_t heads) {
  DecoderLayerWeights lw;
  lw.predicate = {random_block(rng, d, heads), random_block(rng, d, heads)};
  lw.subject = {random_block(rng, d, heads), random_block(rng, d, heads)};
  lw.object = {random_block(rng, d, heads), random_block(rng, d, heads)};
  lw.w_i = gaussian(rng, d, d, 0.5);
  lw.w_p = gaussian(rng, d, d, 0.5);
  return lw;
}

PredicateQueryState random_state(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  return {gaussian(rng, n, d), gaussian(rng, n, d), gaussian(rng, n, d), 0};
}

void expect_near(const Matrix& a, const oracle::Mat& b, double tol) {
  ASSERT_EQ(a.rows(), b.size());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) EXPECT_NEAR(a(i, j), b[i][j], tol);
}

}  // namespace

TEST(GeometricEmbed, OnesProjection) {
  const Matrix g = geometric_embed({{0.5, 0.5, 0.2, 0.2}}, Matrix(4, 3, 1.0));
  EXPECT_EQ(g.rows(), 1u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g(0, j), 1.4, 1e-12);
  const Matrix neg = geometric_embed({{0.5, 0.5, 0.2, 0.2}}, Matrix(4, 3, -1.0));
  EXPECT_EQ(neg, Matrix(1, 3));
}

TEST(Attention, SingleKeyReturnsValue) {
  const auto b = AttentionBlock::identity(3);
  const Matrix out = multi_head_attention(Matrix{{0.3, -1, 2}, {5, 5, 5}}, Matrix{{1, 2, 3}}, Matrix{{7, 8, 9}}, b);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(out.row_vector(i), (std::vector<double>{7, 8, 9}));
}

TEST(Attention, PeakedQuerySelectsFirstValue) {
  const auto b = AttentionBlock::identity(2);
  const Matrix out =
      multi_head_attention(Matrix{{10, 0}}, Matrix{{1, 0}, {0, 1}}, Matrix{{1, 2}, {3, 4}}, b);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-2);
  EXPECT_NEAR(out(0, 1), 2.0, 1e-2);
}

TEST(Attention, ZeroQueryAveragesValues) {
  const auto b = AttentionBlock::identity(2);
  const Matrix out =
      multi_head_attention(Matrix{{0, 0}}, Matrix{{1, 0}, {0, 1}, {4, 4}}, Matrix{{1, 2}, {3, 4}, {5, 0}}, b);
  EXPECT_NEAR(out(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(out(0, 1), 2.0, 1e-12);
}

TEST(Attention, WeightRowsAreDistributions) {
  std::mt19937_64 rng(17);
  for (std::size_t heads : {1u, 2u, 4u}) {
    const auto b = random_block(rng, 8, heads);
    const auto ws = attention_weights(gaussian(rng, 5, 8, 3.0), gaussian(rng, 7, 8, 3.0), b);
    ASSERT_EQ(ws.size(), heads);
    for (const auto& w : ws)
      for (std::size_t i = 0; i < w.rows(); ++i) {
        auto row = w.row(i);
        EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-6);
        for (double v : row) EXPECT_GE(v, 0.0);
      }
  }
}

TEST(Attention, MatchesStraightLineReference) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = random_block(rng, 4, 1);
    const Matrix q = gaussian(rng, 3, 4), k = gaussian(rng, 5, 4), v = gaussian(rng, 5, 4);
    expect_near(multi_head_attention(q, k, v, b), ref_attention(nested(q), nested(k), nested(v), b), 1e-10);
  }
}

TEST(Attention, ShapeErrors) {
  const auto b = AttentionBlock::identity(4, 2);
  EXPECT_THROW(multi_head_attention(Matrix(1, 3), Matrix(2, 4), Matrix(2, 4), b), ShapeError);
  EXPECT_THROW(multi_head_attention(Matrix(1, 4), Matrix(2, 4), Matrix(3, 4), b), ShapeError);
  EXPECT_THROW(multi_head_attention(Matrix(1, 4), Matrix(2, 4), Matrix(2, 4), AttentionBlock::identity(4, 3)),
               ShapeError);
}

TEST(InitQueries, SplitsProjectionIntoThreeBlocks) {
  std::mt19937_64 rng(3);
  const std::size_t d = 4;
  DecoderWeights w = random_decoder_weights({d, 1, 0, 3, 2, 2, 2}, 5);
  w.w_e = hconcat({Matrix::identity(d), Matrix::identity(d), Matrix::identity(d)});
  EntityNodeSet ents{{{0.3, 0.3, 0.2, 0.2}, {0.7, 0.6, 0.3, 0.1}}, {{0.5, 0.5}, {0.5, 0.5}}, gaussian(rng, 2, d)};
  const auto s = init_predicate_queries(w.q_init, ents, w);
  EXPECT_EQ(s.q_is, s.q_io);
  EXPECT_EQ(s.q_is, s.q_p);
  EXPECT_EQ(s.layer, 0u);

  w.w_e = hconcat({Matrix(d, d), Matrix::identity(d), Matrix::identity(d)});
  EXPECT_EQ(init_predicate_queries(w.q_init, ents, w).q_is, Matrix(3, d));
}

TEST(InitQueries, SingleEntityClosedForm) {
  std::mt19937_64 rng(4);
  const std::size_t d = 3;
  DecoderWeights w = random_decoder_weights({d, 1, 0, 4, 1, 2, 2}, 6);
  w.init_attn = AttentionBlock::identity(d);
  w.w_e = gaussian(rng, d, 3 * d);
  w.w_g = gaussian(rng, 4, d);
  EntityNodeSet ents{{{0.4, 0.6, 0.3, 0.5}}, {{0.2, 0.8}}, gaussian(rng, 1, d)};
  const auto s = init_predicate_queries(w.q_init, ents, w);
  const Matrix kv = add(ents.features, geometric_embed(ents.boxes, w.w_g));
  const auto row = oracle::matmul(nested(kv), nested(w.w_e))[0];
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      EXPECT_NEAR(s.q_is(i, j), row[j], 1e-12);
      EXPECT_NEAR(s.q_io(i, j), row[d + j], 1e-12);
      EXPECT_NEAR(s.q_p(i, j), row[2 * d + j], 1e-12);
    }
}

TEST(DecoderLayer, IdentityFusionAddsIndicators) {
  std::mt19937_64 rng(8);
  const std::size_t d = 4;
  auto lw = random_layer(rng, d, 2);
  lw.w_i = lw.w_p = Matrix::identity(d);
  const auto st = random_state(rng, 3, d);
  const Matrix z = gaussian(rng, 5, d), h = gaussian(rng, 2, d);
  const auto next = decoder_layer(st, z, h, lw);
  const Matrix qp = run_sub_decoder(st.q_p, z, lw.predicate);
  const Matrix expected = add(add(qp, next.q_is), next.q_io);
  for (std::size_t i = 0; i < expected.data().size(); ++i) EXPECT_NEAR(next.q_p.data()[i], expected.data()[i], 1e-12);
  EXPECT_EQ(next.layer, 1u);
}

TEST(DecoderLayer, ZeroFusionIgnoresEntities) {
  std::mt19937_64 rng(9);
  const std::size_t d = 4;
  auto lw = random_layer(rng, d, 2);
  lw.w_i = Matrix(d, d);
  const auto st = random_state(rng, 3, d);
  const Matrix z = gaussian(rng, 5, d);
  const auto a = decoder_layer(st, z, gaussian(rng, 2, d), lw);
  const auto b = decoder_layer(st, z, gaussian(rng, 6, d, 4.0), lw);
  EXPECT_EQ(a.q_p, b.q_p);
  EXPECT_NE(a.q_is, b.q_is);
}

TEST(DecoderLayer, MatchesStraightLineReference) {
  std::mt19937_64 rng(12);
  const std::size_t d = 4;
  for (int trial = 0; trial < 10; ++trial) {
    const auto lw = random_layer(rng, d, 1);
    const auto st = random_state(rng, 3, d);
    const Matrix z = gaussian(rng, 4, d), h = gaussian(rng, 2, d);
    const auto next = decoder_layer(st, z, h, lw);

    auto sub_dec = [](const oracle::Mat& q, const oracle::Mat& mem, const SubDecoderWeights& w) {
      const auto self = ref_attention(q, q, q, w.self_attn);
      return ref_attention(self, mem, mem, w.cross_attn);
    };
    const auto tp = sub_dec(nested(st.q_p), nested(z), lw.predicate);
    const auto ts = sub_dec(nested(st.q_is), nested(h), lw.subject);
    const auto to = sub_dec(nested(st.q_io), nested(h), lw.object);
    const auto fused = oracle::add(tp, oracle::matmul(oracle::add(ts, to), nested(lw.w_i)));
    expect_near(next.q_p, oracle::matmul(fused, nested(lw.w_p)), 1e-9);
    expect_near(next.q_is, ts, 1e-9);
    expect_near(next.q_io, to, 1e-9);
  }
}

TEST(Heads, ZeroWeightsGiveUniformAndCentered) {
  const std::size_t d = 4, cp = 3, ce = 5;
  DecoderWeights w;
  w.w_cls_pred = Matrix(d, cp + 1);
  w.w_reg_pred = Matrix(d, 4);
  w.w_cls_ent = Matrix(d, ce + 1);
  w.w_reg_ent = Matrix(d, 4);
  std::mt19937_64 rng(1);
  const auto out = predict_heads(random_state(rng, 2, d), w);
  ASSERT_EQ(out.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    for (double p : out.pred_classes[i]) EXPECT_NEAR(p, 1.0 / (cp + 1), 1e-15);
    for (double p : out.sub_classes[i]) EXPECT_NEAR(p, 1.0 / (ce + 1), 1e-15);
    EXPECT_DOUBLE_EQ(out.centers[i].xs, 0.5);
    EXPECT_DOUBLE_EQ(out.centers[i].yo, 0.5);
    EXPECT_DOUBLE_EQ(out.obj_boxes[i].w, 0.5);
  }
}

TEST(Decode, OutputsSatisfyInvariantsAndAreDeterministic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ModelDims dims{8, 2, 2, 6, 4, 4, 3};
    const auto w = random_decoder_weights(dims, seed);
    SyntheticOptions opt;
    opt.seed = seed;
    opt.feature_dim = dims.d;
    const auto scene = gen_synthetic(opt);
    const auto a = decode(w, scene.entities, *scene.z_p);
    const auto b = decode(w, scene.entities, *scene.z_p);
    EXPECT_EQ(a, b);
    ASSERT_EQ(a.size(), dims.num_queries);
    EXPECT_NO_THROW(a.validate());
    for (const auto& p : a.pred_classes) EXPECT_EQ(p.size(), dims.num_predicate_classes + 1);
  }
}

TEST(Decode, RejectsBadShapes) {
  const auto w = random_decoder_weights({}, 1);
  SyntheticOptions opt;
  opt.feature_dim = 6;
  const auto scene = gen_synthetic(opt);
  EXPECT_THROW(decode(w, scene.entities, *scene.z_p), ShapeError);
  auto bad = w;
  bad.w_e = Matrix(8, 8);
  opt.feature_dim = 8;
  const auto ok = gen_synthetic(opt);
  EXPECT_THROW(decode(bad, ok.entities, *ok.z_p), ShapeError);
}
