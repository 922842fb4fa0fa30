#include <gtest/gtest.h>

#include "rplab/metrics.hpp"

using namespace rplab;

namespace {
std::vector<TransitionRecord> log_of(const std::vector<double>& distances, const std::vector<double>& deltas) {
  std::vector<TransitionRecord> log(distances.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    log[i].t = static_cast<std::int64_t>(i);
    log[i].distance = distances[i];
    log[i].delta = deltas[i];
  }
  return log;
}
}  // namespace

TEST(ComputeReport, AlwaysOnTarget) {
  const auto r = compute_report(log_of({0, 0, 0}, {0, 0, 0}), 2);
  EXPECT_EQ(r.epsilon, 0.0);
  EXPECT_EQ(r.C_total, 0.0);
  EXPECT_EQ(r.B_realized, 0.0);
}

TEST(ComputeReport, FourStepArithmetic) {
  const auto r = compute_report(log_of({1, 1, 0, 0}, {-3, -3, 0, 0}), 4);
  EXPECT_EQ(r.epsilon, 0.5);
  EXPECT_EQ(r.C_total, 6.0);
  EXPECT_EQ(r.C_per_step, 1.5);
  EXPECT_EQ(r.B_realized, 3.0);
  EXPECT_EQ(r.T, 4);
}

TEST(ComputeReport, EpochCurveKeepsPartialEpoch) {
  const auto r = compute_report(log_of({1, 0, 1, 1, 0}, {0, 0, 0, 0, 0}), 2);
  ASSERT_EQ(r.epoch_curve.size(), 3u);
  EXPECT_EQ(r.epoch_curve[0].mean_distance, 0.5);
  EXPECT_EQ(r.epoch_curve[1].mean_distance, 1.0);
  EXPECT_EQ(r.epoch_curve[2].steps, 1);
  EXPECT_EQ(r.epoch_curve[2].mean_distance, 0.0);
}

TEST(ComputeReport, ConsistencyOnRandomLogs) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(3000));
    std::vector<double> d(n), delta(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = rng.uniform();
      delta[i] = -rng.uniform(0, 4);
    }
    const auto r = compute_report(log_of(d, delta), 1 + rng.uniform_int(500));
    double weighted = 0.0, max_abs = 0.0;
    std::int64_t steps = 0;
    for (const auto& p : r.epoch_curve) {
      weighted += p.mean_distance * static_cast<double>(p.steps);
      steps += p.steps;
    }
    for (double x : delta) max_abs = std::max(max_abs, std::abs(x));
    EXPECT_EQ(steps, r.T);
    EXPECT_NEAR(weighted / static_cast<double>(r.T), r.epsilon, 1e-12);
    EXPECT_NEAR(r.C_per_step * static_cast<double>(r.T), r.C_total, 1e-9 * std::max(1.0, r.C_total));
    EXPECT_EQ(r.B_realized, max_abs);
    EXPECT_GE(r.epsilon, 0.0);
    EXPECT_LE(r.epsilon, 1.0);
  }
}

TEST(ComputeReport, RejectsEmptyLog) {
  EXPECT_THROW(compute_report(std::vector<TransitionRecord>{}, 4), DomainError);
}

TEST(StudentT, CriticalValues) {
  // two-sided 95% table values
  EXPECT_NEAR(student_t95(1), 12.706204736174707, 1e-9);
  EXPECT_NEAR(student_t95(9), 2.2621571627409915, 1e-9);
  EXPECT_NEAR(student_t95(1000000), 1.959963984540054, 1e-5);
}

TEST(Aggregate, MeanAndHalfWidth) {
  const std::vector<double> v{1, 2, 3, 4};
  const MetricSummary m = summarize(v);
  EXPECT_EQ(m.mean, 2.5);
  const double sd = std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0);
  EXPECT_NEAR(m.ci_half_width, student_t95(3) * sd / 2.0, 1e-12);
  EXPECT_EQ(summarize(std::vector<double>{7.0}).ci_half_width, 0.0);
}

TEST(Aggregate, OverReports) {
  std::vector<EfficiencyReport> reps(3);
  for (int i = 0; i < 3; ++i) {
    reps[static_cast<std::size_t>(i)].epsilon = 0.1 * i;
    reps[static_cast<std::size_t>(i)].C_total = 10.0 * i;
  }
  const AggregateReport a = aggregate(reps);
  EXPECT_EQ(a.n, 3u);
  EXPECT_NEAR(a.epsilon.mean, 0.1, 1e-15);
  EXPECT_NEAR(a.C_total.mean, 10.0, 1e-12);
  EXPECT_GT(a.epsilon.ci_half_width, 0.0);
}

TEST(QuarterMeans, SplitsByEpochStart) {
  std::vector<double> d(16, 0.0);
  for (int i = 0; i < 4; ++i) d[static_cast<std::size_t>(i)] = 1.0;
  const auto r = compute_report(log_of(d, std::vector<double>(16, 0.0)), 2);
  const QuarterMeans q = quarter_means(r);
  EXPECT_EQ(q.first, 1.0);
  EXPECT_EQ(q.last, 0.0);
}
