#include "scribblevs/rpd.hpp"

#include <gtest/gtest.h>

#include <random>

#include "testing_util.hpp"

using namespace scribblevs;

TEST(Normalize, UniformRow) {
  LogitMap<double> z(1, 4);
  auto p = normalize(z);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(p(0, k), 0.25, 1e-12);
}

TEST(Normalize, ClosedFormRow) {
  LogitMap<double> z(1, 2);
  z(0, 0) = std::log(2.0);
  z(0, 1) = 0.0;
  auto p = normalize(z);
  EXPECT_NEAR(p(0, 0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(p(0, 1), 1.0 / 3.0, 1e-12);
}

TEST(Normalize, ShiftInvariant) {
  std::mt19937 rng(3);
  LogitMap<double> z(5, 3);
  auto raw = svtest::random_logits(rng, 5, 3);
  z.values = raw;
  LogitMap<double> shifted = z;
  for (int64_t i = 0; i < 5; ++i)
    for (int k = 0; k < 3; ++k) shifted(i, k) += 100.0 * (i + 1);
  auto a = normalize(z);
  auto b = normalize(shifted);
  for (size_t j = 0; j < a.values.size(); ++j) EXPECT_NEAR(a.values[j], b.values[j], 1e-12);
  EXPECT_TRUE(is_probability_map(a));
}

TEST(Normalize, RejectsNonFinite) {
  LogitMap<double> z(1, 2);
  z(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(normalize(z), NumericError);
}

TEST(Partition, ConfidentPixelLandsInOmega) {
  ProbabilityMap<double> p(1, 4);
  p(0, 0) = 0.7;
  p(0, 1) = p(0, 2) = p(0, 3) = 0.1;
  auto part = partition(p, 0.5);
  EXPECT_EQ(part.omega[0], 1);
  EXPECT_EQ(part.theta[0], 0);
}

TEST(Partition, ThresholdIsStrict) {
  ProbabilityMap<double> p(1, 4);
  for (int k = 0; k < 4; ++k) p(0, k) = 0.25;
  auto part = partition(p, 0.25);
  EXPECT_EQ(part.omega[0], 0);
  EXPECT_EQ(part.theta[0], 1);
}

TEST(Partition, QuarterThresholdAdmitsEveryNonUniformPixel) {
  std::mt19937 rng(5);
  auto p = svtest::random_probability_map(rng, 200, 4);
  auto part = partition(p, 0.25);
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    bool uniform = true;
    for (int k = 0; k < 4; ++k) uniform = uniform && std::abs(p(i, k) - 0.25) < 1e-12;
    if (!uniform) EXPECT_EQ(part.omega[static_cast<size_t>(i)], 1) << "pixel " << i;
  }
}

TEST(Partition, RejectsTauOutsideOpenUnitInterval) {
  ProbabilityMap<double> p(1, 2);
  p(0, 0) = p(0, 1) = 0.5;
  EXPECT_THROW(partition(p, 0.0), ConfigError);
  EXPECT_THROW(partition(p, 1.0), ConfigError);
  EXPECT_THROW(partition(p, -0.5), ConfigError);
}

TEST(HardLabels, PicksRowMax) {
  ProbabilityMap<double> p(1, 3);
  p(0, 0) = 0.1;
  p(0, 1) = 0.7;
  p(0, 2) = 0.2;
  EXPECT_EQ(hard_labels(p).labels[0], 1);
}

TEST(HardLabels, TieBreaksToLowestIndex) {
  ProbabilityMap<double> p(1, 2);
  p(0, 0) = 0.5;
  p(0, 1) = 0.5;
  EXPECT_EQ(hard_labels(p).labels[0], 0);
}

TEST(HardLabels, AlwaysAttainsRowMax) {
  std::mt19937 rng(7);
  auto p = svtest::random_probability_map(rng, 100, 5);
  auto labels = hard_labels(p);
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    double hi = p(i, 0);
    for (int k = 1; k < 5; ++k) hi = std::max(hi, p(i, k));
    EXPECT_EQ(p(i, labels.labels[static_cast<size_t>(i)]), hi);
  }
}

TEST(Fuse, AllConfidentKeepsHardLabels) {
  HardLabelMap a;
  a.labels = {2, 0, 1};
  ConfidencePartition part;
  part.omega = {1, 1, 1};
  part.theta = {0, 0, 0};
  auto pl = fuse(a, part);
  EXPECT_EQ(pl.labels, (std::vector<int32_t>{2, 0, 1}));
}

TEST(Fuse, AllUncertainGoesInactive) {
  HardLabelMap a;
  a.labels = {2, 0, 1};
  ConfidencePartition part;
  part.omega = {0, 0, 0};
  part.theta = {1, 1, 1};
  auto pl = fuse(a, part);
  for (auto v : pl.labels) EXPECT_EQ(v, kIgnoreLabel);
}

TEST(Fuse, MixedCase) {
  HardLabelMap a;
  a.labels = {3, 1, 0, 2};
  ConfidencePartition part;
  part.omega = {1, 0, 0, 1};
  part.theta = {0, 1, 1, 0};
  auto pl = fuse(a, part);
  EXPECT_EQ(pl.labels, (std::vector<int32_t>{3, kIgnoreLabel, kIgnoreLabel, 2}));
}

TEST(Rpd, LargeMarginLogitsStayActiveEverywhere) {
  LogitMap<double> z(3, 4);
  for (int64_t i = 0; i < 3; ++i) z(i, static_cast<int>(i)) = 20.0;
  auto pl = rpd(z, 0.9);
  EXPECT_EQ(pl.labels, (std::vector<int32_t>{0, 1, 2}));
}

TEST(Rpd, UniformLogitsGoFullyInactive) {
  LogitMap<double> z(6, 4);
  auto pl = rpd(z, 0.5);
  for (auto v : pl.labels) EXPECT_EQ(v, kIgnoreLabel);
  EXPECT_EQ(pl.num_active(), 0);
}

TEST(Rpd, QuarterTauEqualsArgmaxOnNonUniformPixels) {
  std::mt19937 rng(11);
  LogitMap<double> z(300, 4);
  z.values = svtest::random_logits(rng, 300, 4);
  auto pl = rpd(z, 0.25);
  auto am = hard_labels(normalize(z));
  for (int64_t i = 0; i < 300; ++i) {
    EXPECT_EQ(pl.labels[static_cast<size_t>(i)], am.labels[static_cast<size_t>(i)]);
  }
}

TEST(Rpd, PropertiesOnRandomMaps) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> taud(0.05, 0.95);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t n = 1 + trial % 40;
    const int k = 2 + trial % 4;
    auto p = svtest::random_probability_map(rng, n, k);
    const double tau = taud(rng);
    auto part = partition(p, tau);

    // Exact partition.
    int64_t omega = 0, theta = 0;
    for (int64_t i = 0; i < n; ++i) {
      EXPECT_NE(part.omega[static_cast<size_t>(i)], part.theta[static_cast<size_t>(i)]);
      omega += part.omega[static_cast<size_t>(i)];
      theta += part.theta[static_cast<size_t>(i)];
    }
    EXPECT_EQ(omega + theta, n);

    // Monotone in tau.
    const double tau2 = tau + 0.5 * (1.0 - tau) * 0.9;
    auto part2 = partition(p, tau2);
    for (int64_t i = 0; i < n; ++i) {
      if (part2.omega[static_cast<size_t>(i)]) EXPECT_EQ(part.omega[static_cast<size_t>(i)], 1);
    }

    // Active pixels agree with argmax; determinism.
    auto pl = rpd_from_probabilities(p, tau);
    auto pl_again = rpd_from_probabilities(p, tau);
    EXPECT_EQ(pl.labels, pl_again.labels);
    auto am = hard_labels(p);
    for (int64_t i = 0; i < n; ++i) {
      if (pl.labels[static_cast<size_t>(i)] != kIgnoreLabel) {
        EXPECT_EQ(pl.labels[static_cast<size_t>(i)], am.labels[static_cast<size_t>(i)]);
      }
    }
  }
}

TEST(Rpd, ShiftInvariance) {
  std::mt19937 rng(17);
  LogitMap<double> z(40, 3);
  z.values = svtest::random_logits(rng, 40, 3);
  LogitMap<double> shifted = z;
  std::uniform_real_distribution<double> cd(-50.0, 50.0);
  for (int64_t i = 0; i < 40; ++i) {
    const double c = cd(rng);
    for (int k = 0; k < 3; ++k) shifted(i, k) += c;
  }
  EXPECT_EQ(rpd(z, 0.5).labels, rpd(shifted, 0.5).labels);
}
