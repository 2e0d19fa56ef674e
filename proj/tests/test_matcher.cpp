#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "sgtrkit/matcher.hpp"

using namespace sgtrkit;

namespace {

const Box kSub{0.3, 0.4, 0.2, 0.3};
const Box kObj{0.7, 0.6, 0.3, 0.2};

GTRelation gt() { return {kSub, 1, kObj, 2, 0}; }

Triplet perfect() {
  Triplet t;
  t.sub_box = kSub;
  t.obj_box = kObj;
  t.sub_class = one_hot(1, 3);
  t.obj_class = one_hot(2, 3);
  t.pred_class = one_hot(0, 2);
  t.centers = centers_of(kSub, kObj);
  return t;
}

Triplet random_triplet(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(0.1, 0.9), e(0.05, 0.5), u(0.01, 1.0);
  auto probs = [&](std::size_t n) {
    ProbVector p(n);
    double s = 0.0;
    for (double& v : p) s += (v = u(rng));
    for (double& v : p) v /= s;
    return p;
  };
  Triplet t;
  t.sub_box = {c(rng), c(rng), e(rng), e(rng)};
  t.obj_box = {c(rng), c(rng), e(rng), e(rng)};
  t.sub_class = probs(4);
  t.obj_class = probs(4);
  t.pred_class = probs(3);
  t.centers = {c(rng), c(rng), c(rng), c(rng)};
  return t;
}

GTRelation random_gt(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(0.1, 0.9), e(0.05, 0.5);
  std::uniform_int_distribution<std::size_t> ec(0, 2), pc(0, 1);
  return {{c(rng), c(rng), e(rng), e(rng)}, ec(rng), {c(rng), c(rng), e(rng), e(rng)}, ec(rng), pc(rng)};
}

oracle::Mat nested(const Matrix& m) {
  oracle::Mat out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m.row_vector(i);
  return out;
}

}  // namespace

TEST(PredicateCost, ClosedForms) {
  Triplet t = perfect();
  EXPECT_NEAR(predicate_cost(t, gt()), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(predicate_cost(t, gt()), 0.367879, 1e-6);
  t.pred_class = {0.0, 1.0, 0.0};
  EXPECT_NEAR(predicate_cost(t, gt()), 1.0, 1e-12);
  t = perfect();
  t.centers.xs += 0.1;
  t.centers.ys += 0.1;
  EXPECT_NEAR(predicate_cost(t, gt()), std::exp(-1.0) + 0.2, 1e-12);
}

TEST(PredicateCost, LabelOutsideForeground) {
  GTRelation g = gt();
  g.pred_label = 2;  // the background slot for two predicate classes
  EXPECT_THROW(predicate_cost(perfect(), g), ArgumentError);
}

TEST(EntityCost, ClosedForms) {
  EXPECT_NEAR(entity_cost(perfect(), gt()), 2.0 * std::exp(-2.0), 1e-12);
  EXPECT_NEAR(entity_cost(perfect(), gt()), 0.270671, 1e-6);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(entity_cost(random_triplet(rng), random_gt(rng), 0, 0, 0), 0.0);
}

TEST(EntityCost, TermwiseReference) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const Triplet t = random_triplet(rng);
    const GTRelation g = random_gt(rng);
    auto clip = [](double v) { return std::min(1.0, std::max(0.0, v)); };
    auto ref_box = [](const Box& b) { return oracle::RefBox{b.cx, b.cy, b.w, b.h}; };
    const double giou_term = std::exp(-clip(oracle::ref_giou(ref_box(t.sub_box), ref_box(g.sub_box)))) *
                             std::exp(-clip(oracle::ref_giou(ref_box(t.obj_box), ref_box(g.obj_box))));
    double l1 = 0.0;
    for (auto [a, b] : {std::pair{t.sub_box, g.sub_box}, std::pair{t.obj_box, g.obj_box}})
      l1 += std::fabs(a.cx - b.cx) + std::fabs(a.cy - b.cy) + std::fabs(a.w - b.w) + std::fabs(a.h - b.h);
    const double cls = std::exp(-t.sub_class[g.sub_label]) * std::exp(-t.obj_class[g.obj_label]);
    EXPECT_NEAR(entity_cost(t, g, 0.5, 2.0, 3.0), 0.5 * giou_term + 2.0 * l1 + 3.0 * cls, 1e-12);
  }
}

TEST(EntityCost, PerfectPredictionIsMinimal) {
  std::mt19937_64 rng(3);
  const double best_e = entity_cost(perfect(), gt());
  const double best_p = predicate_cost(perfect(), gt());
  for (int i = 0; i < 500; ++i) {
    const Triplet t = random_triplet(rng);
    EXPECT_GT(entity_cost(t, gt()), best_e);
    EXPECT_GT(predicate_cost(t, gt()), best_p);
  }
}

TEST(BuildCost, LinearInLambdas) {
  std::mt19937_64 rng(4);
  std::vector<Triplet> preds;
  std::vector<GTRelation> gts;
  for (int i = 0; i < 3; ++i) preds.push_back(random_triplet(rng));
  for (int i = 0; i < 2; ++i) gts.push_back(random_gt(rng));
  CostWeights w;
  const auto base = build_cost(preds, gts, w);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_NEAR(base.values(i, j), predicate_cost(preds[i], gts[j]) + entity_cost(preds[i], gts[j]), 1e-12);
  CostWeights scaled = w;
  scaled.lambda_p = scaled.lambda_e = 2.5;
  const auto s = build_cost(preds, gts, scaled);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(s.values.data()[k], 2.5 * base.values.data()[k], 1e-12);
  CostWeights only_p = w;
  only_p.lambda_e = 0.0;
  const auto p = build_cost(preds, gts, only_p);
  EXPECT_DOUBLE_EQ(p.values(2, 1), predicate_cost(preds[2], gts[1]));
  CostWeights none = w;
  none.lambda_p = none.lambda_e = 0.0;
  EXPECT_EQ(build_cost(preds, gts, none).values, Matrix(3, 2));
  EXPECT_THROW(build_cost({}, gts), DegenerateInputError);
  EXPECT_THROW(build_cost(preds, {}), DegenerateInputError);
}

TEST(Hungarian, SmallExamples) {
  const auto diag = hungarian({Matrix{{0, 5, 5}, {5, 0, 5}, {5, 5, 0}}});
  EXPECT_EQ(diag.gt_to_pred, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(diag.total_cost, 0.0);

  const auto two = hungarian({Matrix{{1, 2}, {3, 0}}});
  EXPECT_EQ(two.gt_to_pred, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(two.total_cost, 1.0);

  const auto three = hungarian({Matrix{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}}});
  EXPECT_EQ(three.total_cost, 5.0);
  EXPECT_EQ(three.gt_to_pred, (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Hungarian, RectangularAndInfeasible) {
  const auto m = hungarian({Matrix{{9, 9}, {1, 9}, {9, 2}, {0, 0}}});
  EXPECT_EQ(m.total_cost, 1.0);
  EXPECT_EQ(m.gt_to_pred, (std::vector<std::size_t>{1, 3}));
  EXPECT_THROW(hungarian({Matrix{{1, 2, 3}}}), ArgumentError);
  EXPECT_THROW(hungarian({Matrix{{1, std::nan("")}, {0, 0}}}), ArgumentError);
}

TEST(Hungarian, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> dim(1, 7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t rows = dim(rng), cols = dim(rng);
    if (cols > rows) std::swap(rows, cols);
    Matrix c(rows, cols);
    for (double& v : c.data()) v = trial % 3 == 0 ? std::floor(u(rng)) : u(rng);
    const auto m = hungarian({c});
    EXPECT_EQ(m.total_cost, oracle::brute_force_assignment(nested(c)));
    ASSERT_EQ(m.gt_to_pred.size(), cols);
    EXPECT_EQ(std::set<std::size_t>(m.gt_to_pred.begin(), m.gt_to_pred.end()).size(), cols);
  }
}

TEST(Hungarian, RowConstantKeepsAssignment) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix c(5, 5);
    for (double& v : c.data()) v = u(rng);
    const auto base = hungarian({c});
    Matrix shifted = c;
    for (std::size_t j = 0; j < 5; ++j) shifted(trial % 5, j) += 3.25;
    EXPECT_EQ(hungarian({shifted}).gt_to_pred, base.gt_to_pred);
  }
}
