#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rplab/core.hpp"

namespace rplab {

struct EpochPoint {
  std::int64_t epoch = 0;
  std::int64_t steps = 0;
  double mean_distance = 0.0;
  bool operator==(const EpochPoint&) const = default;
};

// Realised attack efficiency of one training run.
struct EfficiencyReport {
  std::int64_t T = 0;
  double epsilon = 0.0;     // sum_t d(a_t, target(s_t)) / T
  double C_total = 0.0;     // sum_t |delta_t|
  double C_per_step = 0.0;  // C_total / T
  double B_realized = 0.0;  // max_t |delta_t|
  std::int64_t epoch_len = 0;
  std::vector<EpochPoint> epoch_curve;
  std::optional<std::int64_t> exhausted_at;
  std::uint64_t seed = 0;
  bool operator==(const EfficiencyReport&) const = default;
};

// Builds the report from a step log whose `distance` fields hold the
// per-step distance to the target action. The final partial epoch is kept.
EfficiencyReport compute_report(std::span<const TransitionRecord> log, std::int64_t epoch_len,
                                std::optional<std::int64_t> exhausted_at = std::nullopt);

struct MetricSummary {
  double mean = 0.0;
  double ci_half_width = 0.0;  // 95% Student-t
  bool operator==(const MetricSummary&) const = default;
};

struct AggregateReport {
  std::size_t n = 0;
  MetricSummary epsilon, C_total, C_per_step, B_realized;
  bool operator==(const AggregateReport&) const = default;
};

// Mean and half-width of the 95% Student-t interval. The half-width needs
// at least two samples and is 0 otherwise.
MetricSummary summarize(std::span<const double> values);
AggregateReport aggregate(std::span<const EfficiencyReport> reports);

// Two-sided 95% Student-t critical value for `dof` degrees of freedom.
double student_t95(std::size_t dof);

// Mean epoch distance over the first and last quarter of the curve,
// weighted by epoch lengths.
struct QuarterMeans {
  double first = 0.0;
  double last = 0.0;
};
QuarterMeans quarter_means(const EfficiencyReport& report);

}  // namespace rplab
