#include "scribblevs/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scribblevs/rpd.hpp"
#include "testing_util.hpp"

using namespace scribblevs;
using svtest::close_rel;

namespace {

ProbabilityMap<double> rows_to_map(std::initializer_list<std::initializer_list<double>> rows) {
  ProbabilityMap<double> p(static_cast<int64_t>(rows.size()), static_cast<int>(rows.begin()->size()));
  int64_t i = 0;
  for (const auto& row : rows) {
    int k = 0;
    for (double v : row) p(i, k++) = v;
    ++i;
  }
  return p;
}

ScribbleMask scribble_of(std::initializer_list<int32_t> labels) {
  ScribbleMask s;
  s.labels = labels;
  return s;
}

PseudoLabelMap pl_of(std::initializer_list<int32_t> labels) {
  PseudoLabelMap pl;
  pl.labels = labels;
  return pl;
}

}  // namespace

TEST(PartialCrossEntropy, AllIgnoredIsZero) {
  auto p = rows_to_map({{0.2, 0.8}, {0.5, 0.5}});
  auto s = scribble_of({kIgnoreLabel, kIgnoreLabel});
  EXPECT_EQ(partial_cross_entropy(p, s), 0.0);
}

TEST(PartialCrossEntropy, CertainPixelCostsNothing) {
  auto p = rows_to_map({{0.0, 1.0}});
  auto s = scribble_of({1});
  EXPECT_EQ(partial_cross_entropy(p, s), 0.0);
}

TEST(PartialCrossEntropy, TwoPixelHandExpansion) {
  auto p = rows_to_map({{0.8, 0.2}, {0.3, 0.7}});
  auto s = scribble_of({0, 1});
  const double expected = -(std::log(0.8) + std::log(0.7));
  EXPECT_NEAR(partial_cross_entropy(p, s), expected, 1e-12);
}

TEST(PartialCrossEntropy, StructuralErrors) {
  auto p = rows_to_map({{0.8, 0.2}, {0.3, 0.7}});
  EXPECT_THROW(partial_cross_entropy(p, scribble_of({0})), StructuralError);
  EXPECT_THROW(partial_cross_entropy(p, scribble_of({0, 2})), StructuralError);
}

TEST(PlCrossEntropy, AllInactiveIsZero) {
  auto p = rows_to_map({{0.2, 0.8}});
  EXPECT_EQ(pl_cross_entropy(p, pl_of({kIgnoreLabel})), 0.0);
}

TEST(PlCrossEntropy, MatchesArgmaxOfOneHot) {
  auto p = rows_to_map({{1.0, 0.0}, {0.0, 1.0}});
  EXPECT_EQ(pl_cross_entropy(p, pl_of({0, 1})), 0.0);
}

TEST(PlCrossEntropy, ThreePixelHandExpansion) {
  auto p = rows_to_map({{0.9, 0.1}, {0.5, 0.5}, {0.4, 0.6}});
  auto pl = pl_of({0, kIgnoreLabel, 1});
  const double expected = -(std::log(0.9) + std::log(0.6));
  EXPECT_NEAR(pl_cross_entropy(p, pl), expected, 1e-12);
}

TEST(PlDice, PerfectOverlapNearZero) {
  auto p = rows_to_map({{1.0, 0.0}, {0.0, 1.0}});
  EXPECT_NEAR(pl_dice(p, pl_of({0, 1})), 0.0, 1e-6);
}

TEST(PlDice, EmptyActiveRegionIsZero) {
  auto p = rows_to_map({{0.2, 0.8}});
  EXPECT_EQ(pl_dice(p, pl_of({kIgnoreLabel})), 0.0);
}

TEST(PlDice, TwoPixelHandExpansion) {
  auto p = rows_to_map({{0.6, 0.4}, {0.4, 0.6}});
  auto pl = pl_of({0, 1});
  const double inter = 0.6 + 0.6;
  const double denom = (0.36 + 0.16 + 0.16 + 0.36) + 2.0;
  EXPECT_NEAR(pl_dice(p, pl), 1.0 - (2.0 * inter + kDiceSmooth) / (denom + kDiceSmooth), 1e-15);
  EXPECT_NEAR(pl_dice(p, pl), 1.0 - 2.0 * inter / denom, 1e-5);
}

TEST(PlLoss, HalfSumOfComponents) {
  auto p_ce = rows_to_map({{0.9, 0.1}, {0.5, 0.5}, {0.4, 0.6}});
  auto pl_ce_labels = pl_of({0, kIgnoreLabel, 1});
  EXPECT_NEAR(pl_loss(p_ce, pl_ce_labels),
              0.5 * (svtest::oracle_pl_ce(p_ce, pl_ce_labels) + svtest::oracle_pl_dice(p_ce, pl_ce_labels)),
              1e-12);

  auto p_dc = rows_to_map({{0.6, 0.4}, {0.4, 0.6}});
  auto pl_dc_labels = pl_of({0, 1});
  EXPECT_NEAR(pl_loss(p_dc, pl_dc_labels),
              0.5 * (svtest::oracle_pl_ce(p_dc, pl_dc_labels) + svtest::oracle_pl_dice(p_dc, pl_dc_labels)),
              1e-12);

  auto p = rows_to_map({{0.2, 0.8}});
  EXPECT_EQ(pl_loss(p, pl_of({kIgnoreLabel})), 0.0);
}

TEST(TotalLoss, WeightedSum) {
  EXPECT_EQ(total_loss(1.0, 2.0, 0.0), 1.0);
  EXPECT_EQ(total_loss(1.0, 2.0, 1.0), 3.0);
  EXPECT_NEAR(total_loss(0.7, 0.4, std::exp(-1.25)), 0.7 + 0.4 * std::exp(-1.25), 1e-15);
}

TEST(Losses, ZeroMaskingIsBitExact) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t n = 1 + trial;
    const int k = 2 + trial % 4;
    auto p = svtest::random_probability_map(rng, n, k);
    auto s = svtest::random_scribble(rng, n, k, 0.6);
    auto pl = svtest::random_pseudo_labels(rng, n, k, 0.6);

    const double base_ce = partial_cross_entropy(p, s);
    const double base_plce = pl_cross_entropy(p, pl);
    const double base_dice = pl_dice(p, pl);

    // Append and prepend unlabeled pixels with arbitrary probability rows.
    auto p2 = svtest::random_probability_map(rng, n + 5, k);
    for (int64_t i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c) p2(i + 2, c) = p(i, c);
    ScribbleMask s2;
    s2.labels.assign(static_cast<size_t>(n) + 5, kIgnoreLabel);
    PseudoLabelMap pl2;
    pl2.labels.assign(static_cast<size_t>(n) + 5, kIgnoreLabel);
    for (int64_t i = 0; i < n; ++i) {
      s2.labels[static_cast<size_t>(i) + 2] = s.labels[static_cast<size_t>(i)];
      pl2.labels[static_cast<size_t>(i) + 2] = pl.labels[static_cast<size_t>(i)];
    }

    EXPECT_EQ(partial_cross_entropy(p2, s2), base_ce);
    EXPECT_EQ(pl_cross_entropy(p2, pl2), base_plce);
    EXPECT_EQ(pl_dice(p2, pl2), base_dice);
  }
}

TEST(Losses, OracleEquivalenceOnRandomInstances) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int64_t> nd(1, 64);
  std::uniform_int_distribution<int> kd(2, 5);
  for (int trial = 0; trial < 60; ++trial) {
    const int64_t n = nd(rng);
    const int k = kd(rng);
    auto p = svtest::random_probability_map(rng, n, k);
    auto s = svtest::random_scribble(rng, n, k, 0.5);
    auto pl = svtest::random_pseudo_labels(rng, n, k, 0.5);

    EXPECT_TRUE(close_rel(partial_cross_entropy(p, s), svtest::oracle_partial_ce(p, s), 1e-6, 1e-12));
    EXPECT_TRUE(close_rel(pl_cross_entropy(p, pl), svtest::oracle_pl_ce(p, pl), 1e-6, 1e-12));
    EXPECT_TRUE(close_rel(pl_dice(p, pl), svtest::oracle_pl_dice(p, pl), 1e-6, 1e-12));
    EXPECT_TRUE(close_rel(pl_loss(p, pl), svtest::oracle_pl_loss(p, pl), 1e-6, 1e-12));
  }
}

TEST(Losses, MonotoneInLabeledProbability) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t n = 8;
    const int k = 4;
    auto p = svtest::random_probability_map(rng, n, k);
    auto s = svtest::random_scribble(rng, n, k, 0.8);
    int64_t target = -1;
    for (int64_t i = 0; i < n; ++i)
      if (s.labeled(i)) target = i;
    if (target < 0) continue;

    const double before = partial_cross_entropy(p, s);
    const int32_t cls = s.labels[static_cast<size_t>(target)];
    const double old_v = p(target, cls);
    const double new_v = old_v + 0.5 * (1.0 - old_v);
    const double scale = (1.0 - new_v) / (1.0 - old_v);
    for (int c = 0; c < k; ++c) p(target, c) *= scale;
    p(target, cls) = new_v;

    EXPECT_LE(partial_cross_entropy(p, s), before + 1e-12);
  }
}

TEST(Losses, RangeInvariants) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    auto p = svtest::random_probability_map(rng, 24, 3);
    auto s = svtest::random_scribble(rng, 24, 3, 0.5);
    auto pl = svtest::random_pseudo_labels(rng, 24, 3, 0.5);
    EXPECT_GE(partial_cross_entropy(p, s), 0.0);
    EXPECT_GE(pl_cross_entropy(p, pl), 0.0);
    const double d = pl_dice(p, pl);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
}

namespace {

// Central finite differences of loss(softmax(z)) with respect to z.
template <typename LossFn>
std::vector<double> fd_logit_grad(const std::vector<double>& z, int64_t n, int k, LossFn loss) {
  const double h = 1e-4;
  std::vector<double> g(z.size());
  for (size_t j = 0; j < z.size(); ++j) {
    auto zp = z;
    auto zm = z;
    zp[j] += h;
    zm[j] -= h;
    g[j] = (loss(svtest::plain_softmax(zp, n, k)) - loss(svtest::plain_softmax(zm, n, k))) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST(Losses, GradientMatchesFiniteDifferences) {
  std::mt19937 rng(19);
  std::uniform_int_distribution<int64_t> nd(2, 10);
  std::uniform_int_distribution<int> kd(2, 5);
  for (int trial = 0; trial < 12; ++trial) {
    const int64_t n = nd(rng);
    const int k = kd(rng);
    auto z = svtest::random_logits(rng, n, k);
    auto s = svtest::random_scribble(rng, n, k, 0.6);
    auto pl = svtest::random_pseudo_labels(rng, n, k, 0.6);
    auto p = svtest::plain_softmax(z, n, k);

    const auto g_sup = partial_cross_entropy_logit_grad(p, s);
    const auto fd_sup = fd_logit_grad(z, n, k, [&](const ProbabilityMap<double>& q) {
      return partial_cross_entropy(q, s);
    });
    for (size_t j = 0; j < g_sup.size(); ++j) {
      EXPECT_TRUE(close_rel(g_sup[j], fd_sup[j], 1e-4, 1e-8)) << "sup grad entry " << j;
    }

    const auto g_pl = pl_loss_logit_grad(p, pl);
    const auto fd_pl = fd_logit_grad(z, n, k, [&](const ProbabilityMap<double>& q) {
      return pl_loss(q, pl);
    });
    for (size_t j = 0; j < g_pl.size(); ++j) {
      EXPECT_TRUE(close_rel(g_pl[j], fd_pl[j], 1e-4, 1e-8)) << "pl grad entry " << j;
    }
  }
}

TEST(Losses, GradientZeroOnEmptyRegions) {
  std::mt19937 rng(23);
  auto p = svtest::random_probability_map(rng, 6, 3);
  ScribbleMask s;
  s.labels.assign(6, kIgnoreLabel);
  PseudoLabelMap pl;
  pl.labels.assign(6, kIgnoreLabel);
  for (double v : partial_cross_entropy_logit_grad(p, s)) EXPECT_EQ(v, 0.0);
  for (double v : pl_loss_logit_grad(p, pl)) EXPECT_EQ(v, 0.0);
}
