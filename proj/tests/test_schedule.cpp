#include "scribblevs/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace scribblevs;

TEST(Warmup, ClosedFormValues) {
  WarmupSchedule sched{100};
  EXPECT_NEAR(sched.lambda_at(0), std::exp(-5.0), 1e-12);
  EXPECT_NEAR(sched.lambda_at(50), std::exp(-1.25), 1e-12);
  EXPECT_NEAR(sched.lambda_at(25), std::exp(-5.0 * 0.5625), 1e-12);
  EXPECT_EQ(sched.lambda_at(100), 1.0);
  EXPECT_EQ(sched.lambda_at(100000), 1.0);
}

TEST(Warmup, ExactExpressionEverywhere) {
  WarmupSchedule sched{12000};
  for (int64_t t = 0; t < 12000; t += 7) {
    const double r = 1.0 - static_cast<double>(t) / 12000.0;
    EXPECT_EQ(sched.lambda_at(t), std::exp(-5.0 * r * r)) << "t=" << t;
  }
  EXPECT_EQ(sched.lambda_at(12000), 1.0);
}

TEST(Warmup, MonotoneNondecreasing) {
  WarmupSchedule sched{500};
  double prev = 0.0;
  for (int64_t t = 0; t <= 600; ++t) {
    const double cur = sched.lambda_at(t);
    EXPECT_GE(cur, prev);
    EXPECT_GT(cur, 0.0);
    EXPECT_LE(cur, 1.0);
    prev = cur;
  }
}

TEST(Warmup, RejectsBadConfigAndArgs) {
  EXPECT_THROW(WarmupSchedule{0}.lambda_at(0), ConfigError);
  EXPECT_THROW(WarmupSchedule{-3}.lambda_at(0), ConfigError);
  EXPECT_THROW(WarmupSchedule{10}.lambda_at(-1), ConfigError);
}

TEST(PolyLr, ClosedFormValues) {
  PolyLRSchedule sched{0.01, 1000};
  EXPECT_EQ(sched.lr_at(0), 0.01);
  EXPECT_NEAR(sched.lr_at(500), 0.01 * std::pow(0.5, 0.9), 1e-15);
  EXPECT_NEAR(sched.lr_at(900), 0.01 * std::pow(0.1, 0.9), 1e-15);
}

TEST(PolyLr, FinalIterationHitsFloor) {
  PolyLRSchedule sched{0.01, 1000};
  EXPECT_EQ(sched.lr_at(1000), 1e-7);
}

TEST(PolyLr, FloorAppliesNearTheEnd) {
  PolyLRSchedule sched{1e-6, 10};
  EXPECT_DOUBLE_EQ(sched.lr_at(9), std::max(1e-6 * std::pow(0.1, 0.9), 1e-7));
  EXPECT_EQ(sched.lr_at(10), 1e-7);
}

TEST(PolyLr, MonotoneNonincreasingAndBounded) {
  PolyLRSchedule sched{0.05, 777};
  double prev = sched.lr_at(0);
  EXPECT_EQ(prev, 0.05);
  for (int64_t t = 1; t <= 777; ++t) {
    const double cur = sched.lr_at(t);
    EXPECT_LE(cur, prev);
    EXPECT_GE(cur, 1e-7);
    prev = cur;
  }
}

TEST(PolyLr, RejectsBadConfigAndArgs) {
  EXPECT_THROW((PolyLRSchedule{0.0, 100}.lr_at(0)), ConfigError);
  EXPECT_THROW((PolyLRSchedule{-0.1, 100}.lr_at(0)), ConfigError);
  EXPECT_THROW((PolyLRSchedule{0.01, 0}.lr_at(0)), ConfigError);
  EXPECT_THROW((PolyLRSchedule{0.01, 100, -1.0}.lr_at(0)), ConfigError);
  EXPECT_THROW((PolyLRSchedule{0.01, 100}.lr_at(-1)), ConfigError);
  EXPECT_THROW((PolyLRSchedule{0.01, 100}.lr_at(101)), TrainingError);
}

TEST(Schedule, FreeFunctionWrappersAgree) {
  EXPECT_EQ(lambda_at(WarmupSchedule{400}, 37), WarmupSchedule{400}.lambda_at(37));
  EXPECT_EQ(lr_at(PolyLRSchedule{0.01, 400}, 37), (PolyLRSchedule{0.01, 400}.lr_at(37)));
}
