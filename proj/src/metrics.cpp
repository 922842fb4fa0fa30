#include "rplab/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

namespace rplab {

EfficiencyReport compute_report(std::span<const TransitionRecord> log, std::int64_t epoch_len,
                                std::optional<std::int64_t> exhausted_at) {
  if (log.empty()) throw DomainError("compute_report: empty log");
  if (epoch_len <= 0) throw DomainError("compute_report: epoch_len must be positive");
  EfficiencyReport r;
  r.T = static_cast<std::int64_t>(log.size());
  r.epoch_len = epoch_len;
  r.exhausted_at = exhausted_at;
  double dist_sum = 0.0;
  double epoch_sum = 0.0;
  std::int64_t epoch_steps = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& rec = log[i];
    dist_sum += rec.distance;
    const double mag = std::abs(rec.delta);
    r.C_total += mag;
    r.B_realized = std::max(r.B_realized, mag);
    epoch_sum += rec.distance;
    ++epoch_steps;
    if (epoch_steps == epoch_len || i + 1 == log.size()) {
      r.epoch_curve.push_back({static_cast<std::int64_t>(r.epoch_curve.size()), epoch_steps,
                               epoch_sum / static_cast<double>(epoch_steps)});
      epoch_sum = 0.0;
      epoch_steps = 0;
    }
  }
  r.epsilon = dist_sum / static_cast<double>(r.T);
  r.C_per_step = r.C_total / static_cast<double>(r.T);
  return r;
}

double student_t95(std::size_t dof) {
  if (dof == 0) return 0.0;
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, 0.025));
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary m;
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  m.mean = sum / n;
  if (values.size() < 2) return m;
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  m.ci_half_width = student_t95(values.size() - 1) * sd / std::sqrt(n);
  return m;
}

AggregateReport aggregate(std::span<const EfficiencyReport> reports) {
  AggregateReport a;
  a.n = reports.size();
  std::vector<double> eps, ct, cps, b;
  for (const auto& r : reports) {
    eps.push_back(r.epsilon);
    ct.push_back(r.C_total);
    cps.push_back(r.C_per_step);
    b.push_back(r.B_realized);
  }
  a.epsilon = summarize(eps);
  a.C_total = summarize(ct);
  a.C_per_step = summarize(cps);
  a.B_realized = summarize(b);
  return a;
}

QuarterMeans quarter_means(const EfficiencyReport& report) {
  const std::int64_t quarter = std::max<std::int64_t>(1, report.T / 4);
  double first = 0.0, last = 0.0;
  std::int64_t nf = 0, nl = 0, start = 0;
  for (const auto& p : report.epoch_curve) {
    const std::int64_t end = start + p.steps;
    // epochs are assigned to a quarter by their first step
    if (start < quarter) {
      first += p.mean_distance * static_cast<double>(p.steps);
      nf += p.steps;
    }
    if (start >= report.T - quarter) {
      last += p.mean_distance * static_cast<double>(p.steps);
      nl += p.steps;
    }
    start = end;
  }
  return {nf ? first / static_cast<double>(nf) : 0.0, nl ? last / static_cast<double>(nl) : 0.0};
}

}  // namespace rplab
