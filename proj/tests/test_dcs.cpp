#include "scribblevs/dcs.hpp"

#include <gtest/gtest.h>

#include <random>

#include "testing_util.hpp"

using namespace scribblevs;

namespace {

ProbabilityMap<double> two_pixel_map(double a0, double a1, double b0, double b1) {
  ProbabilityMap<double> p(2, 2);
  p(0, 0) = a0;
  p(0, 1) = a1;
  p(1, 0) = b0;
  p(1, 1) = b1;
  return p;
}

}  // namespace

TEST(Dcs, LowerScribbleLossWins) {
  auto student = two_pixel_map(0.9, 0.1, 0.2, 0.8);
  auto teacher = two_pixel_map(0.6, 0.4, 0.4, 0.6);
  ScribbleMask s(2);
  s.labels = {0, 1};
  auto out = select(student, teacher, s, 0.5);
  EXPECT_EQ(out.winner, Network::kStudent);
  EXPECT_NEAR(out.loss_student, -(std::log(0.9) + std::log(0.8)), 1e-12);
  EXPECT_NEAR(out.loss_teacher, -(std::log(0.6) + std::log(0.6)), 1e-12);
  EXPECT_EQ(out.pseudo_labels.labels, (std::vector<int32_t>{0, 1}));
}

TEST(Dcs, TeacherWinsWhenStrictlyBetter) {
  auto student = two_pixel_map(0.6, 0.4, 0.4, 0.6);
  auto teacher = two_pixel_map(0.9, 0.1, 0.2, 0.8);
  ScribbleMask s(2);
  s.labels = {0, 1};
  auto out = select(student, teacher, s, 0.5);
  EXPECT_EQ(out.winner, Network::kTeacher);
}

TEST(Dcs, TieGoesToStudent) {
  // Both networks assign 0.7 to the scribbled class at the labeled pixel, so
  // the scribble losses tie exactly; the maps differ at the unlabeled pixel,
  // which exposes whose probabilities seed the pseudo-labels.
  auto student = two_pixel_map(0.7, 0.3, 0.2, 0.8);
  auto teacher = two_pixel_map(0.7, 0.3, 0.9, 0.1);
  ScribbleMask s(2);
  s.labels = {0, kIgnoreLabel};
  auto out = select(student, teacher, s, 0.5);
  EXPECT_EQ(out.loss_student, out.loss_teacher);
  EXPECT_EQ(out.winner, Network::kStudent);
  EXPECT_EQ(out.pseudo_labels.labels, (std::vector<int32_t>{0, 1}));
}

TEST(Dcs, EmptyScribblesTieToStudent) {
  auto student = two_pixel_map(0.1, 0.9, 0.2, 0.8);
  auto teacher = two_pixel_map(0.9, 0.1, 0.8, 0.2);
  ScribbleMask s(2);
  auto out = select(student, teacher, s, 0.5);
  EXPECT_EQ(out.loss_student, 0.0);
  EXPECT_EQ(out.loss_teacher, 0.0);
  EXPECT_EQ(out.winner, Network::kStudent);
  EXPECT_EQ(out.pseudo_labels.labels, (std::vector<int32_t>{1, 1}));
}

TEST(Dcs, PseudoLabelsComeFromWinner) {
  auto student = two_pixel_map(0.9, 0.1, 0.9, 0.1);
  auto teacher = two_pixel_map(0.1, 0.9, 0.1, 0.9);
  ScribbleMask s(2);
  s.labels = {1, kIgnoreLabel};
  auto out = select(student, teacher, s, 0.5);
  EXPECT_EQ(out.winner, Network::kTeacher);
  EXPECT_EQ(out.pseudo_labels.labels, (std::vector<int32_t>{1, 1}));
}

TEST(Dcs, WinnerUncertaintyStillFiltersByTau) {
  auto student = two_pixel_map(0.9, 0.1, 0.55, 0.45);
  auto teacher = two_pixel_map(0.5, 0.5, 0.5, 0.5);
  ScribbleMask s(2);
  s.labels = {0, kIgnoreLabel};
  auto out = select(student, teacher, s, 0.6);
  EXPECT_EQ(out.winner, Network::kStudent);
  EXPECT_EQ(out.pseudo_labels.labels, (std::vector<int32_t>{0, kIgnoreLabel}));
}

TEST(Dcs, ShapeMismatchThrows) {
  auto student = two_pixel_map(0.9, 0.1, 0.2, 0.8);
  ProbabilityMap<double> teacher(3, 2);
  for (int64_t i = 0; i < 3; ++i) teacher(i, 0) = teacher(i, 1) = 0.5;
  ScribbleMask s(2);
  EXPECT_THROW(select(student, teacher, s, 0.5), StructuralError);
}

TEST(Dcs, PropertiesOnRandomInstances) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> taud(0.1, 0.9);
  for (int trial = 0; trial < 300; ++trial) {
    const int64_t n = 1 + trial % 30;
    const int k = 2 + trial % 4;
    auto ps = svtest::random_probability_map(rng, n, k);
    auto pt = svtest::random_probability_map(rng, n, k);
    auto s = svtest::random_scribble(rng, n, k, 0.4);
    const double tau = taud(rng);

    auto out = select(ps, pt, s, tau);
    EXPECT_EQ(out.loss_student, partial_cross_entropy(ps, s));
    EXPECT_EQ(out.loss_teacher, partial_cross_entropy(pt, s));
    if (out.loss_student <= out.loss_teacher) {
      EXPECT_EQ(out.winner, Network::kStudent);
    } else {
      EXPECT_EQ(out.winner, Network::kTeacher);
    }
    const auto& winner_probs = out.winner == Network::kStudent ? ps : pt;
    auto expected = rpd_from_probabilities(winner_probs, tau);
    EXPECT_EQ(out.pseudo_labels.labels, expected.labels);

    auto again = select(ps, pt, s, tau);
    EXPECT_EQ(again.winner, out.winner);
    EXPECT_EQ(again.pseudo_labels.labels, out.pseudo_labels.labels);
  }
}

TEST(Dcs, NetworkNames) {
  EXPECT_STREQ(network_name(Network::kStudent), "student");
  EXPECT_STREQ(network_name(Network::kTeacher), "teacher");
}
