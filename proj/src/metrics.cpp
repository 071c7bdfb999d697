#include "nfq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "nfq/errors.hpp"

namespace nfq {

void TrajectoryRecord::validate() const {
  if (observations.empty()) throw InputError("trajectory is empty");
  if (costs.size() != observations.size() || actions.size() != observations.size()) {
    throw InputError("trajectory cost/action streams are not aligned to its steps");
  }
}

TrajectoryRecord TrajectoryRecord::from_episode(const Episode& episode, std::string checkpoint,
                                                std::uint64_t seed) {
  TrajectoryRecord r;
  for (const auto& tr : episode.transitions) {
    r.observations.push_back(tr.obs);
    r.actions.push_back(tr.action_value);
    r.costs.push_back(tr.cost);
  }
  r.terminated = episode.terminated();
  r.checkpoint = std::move(checkpoint);
  r.seed = seed;
  return r;
}

double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

double avg_cost_per_step(const TrajectoryRecord& traj) {
  if (traj.costs.empty()) throw InputError("trajectory is empty");
  double sum = 0.0;
  for (const double c : traj.costs) sum += c;
  return sum / double(traj.costs.size());
}

StabilityReport stability_metrics(const TrajectoryRecord& traj, const StabilityOptions& options) {
  traj.validate();
  StabilityReport report;
  report.steps = int(traj.steps());
  report.terminated = traj.terminated;
  report.avg_cost = avg_cost_per_step(traj);

  std::vector<double> dev(traj.steps());
  for (std::size_t k = 0; k < dev.size(); ++k) {
    dev[k] = std::abs(degrees(traj.observations[k].angle()));
  }
  const auto inside = [&](std::size_t k) { return dev[k] <= options.tolerance_deg; };

  for (std::size_t k = 0; k < dev.size(); ++k) {
    if (inside(k)) {
      report.n = int(k);
      break;
    }
  }
  // Scan back from the end for the start of the final run inside the band.
  std::size_t k = dev.size();
  while (k > 0 && inside(k - 1)) --k;
  if (k < dev.size()) report.N = int(k);

  if (!report.N) {
    report.diagnostic = "pole never settles inside the tolerance band";
    return report;
  }
  const int start = *report.N <= options.n_max ? options.n_max : *report.N + options.settle;
  if (start >= report.steps) {
    report.diagnostic = fmt::format("evaluation window starting at step {} is empty", start);
    return report;
  }
  double sum = 0.0;
  double worst = 0.0;
  for (int i = start; i < report.steps; ++i) {
    sum += dev[std::size_t(i)];
    worst = std::max(worst, dev[std::size_t(i)]);
  }
  report.e_inf = sum / double(report.steps - start);
  report.e_T = worst;
  report.e_T_mean = report.e_inf;
  return report;
}

CurveStats aggregate_curves(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw InputError("no runs to aggregate");
  std::size_t length = 0;
  for (const auto& r : runs) length = std::max(length, r.size());
  CurveStats out;
  out.mean.assign(length, std::nan(""));
  out.std.assign(length, std::nan(""));
  out.count.assign(length, 0);
  for (std::size_t i = 0; i < length; ++i) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : runs) {
      if (i < r.size() && !std::isnan(r[i])) {
        sum += r[i];
        ++count;
      }
    }
    if (count == 0) continue;
    const double mean = sum / count;
    double sq = 0.0;
    for (const auto& r : runs) {
      if (i < r.size() && !std::isnan(r[i])) sq += (r[i] - mean) * (r[i] - mean);
    }
    out.mean[i] = mean;
    out.std[i] = std::sqrt(sq / count);
    out.count[i] = count;
  }
  return out;
}

namespace {

MetricSummary summarize_values(const std::vector<double>& values) {
  MetricSummary s;
  s.present = int(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (const double v : values) sum += v;
  const double mean = sum / double(values.size());
  double sq = 0.0;
  for (const double v : values) sq += (v - mean) * (v - mean);
  s.mean = mean;
  s.std = std::sqrt(sq / double(values.size()));
  return s;
}

template <typename Get>
MetricSummary summarize_field(const std::vector<StabilityReport>& reports, Get get) {
  std::vector<double> values;
  for (const auto& r : reports) {
    const std::optional<double> v = get(r);
    if (v) values.push_back(*v);
  }
  return summarize_values(values);
}

std::string field(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }
std::string field(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

}  // namespace

ReportSummary summarize(const std::vector<StabilityReport>& reports) {
  using R = StabilityReport;
  using O = std::optional<double>;
  const auto opt = [](const std::optional<int>& v) -> O { return v ? O(double(*v)) : O(); };
  ReportSummary s;
  s.count = int(reports.size());
  s.n = summarize_field(reports, [&](const R& r) { return opt(r.n); });
  s.N = summarize_field(reports, [&](const R& r) { return opt(r.N); });
  s.e_inf = summarize_field(reports, [](const R& r) { return r.e_inf; });
  s.e_T = summarize_field(reports, [](const R& r) { return r.e_T; });
  s.e_T_mean = summarize_field(reports, [](const R& r) { return r.e_T_mean; });
  s.avg_cost = summarize_field(reports, [](const R& r) { return O(r.avg_cost); });
  s.steps = summarize_field(reports, [](const R& r) { return O(double(r.steps)); });
  for (const auto& r : reports) s.terminated += r.terminated ? 1 : 0;
  return s;
}

std::string metrics_csv_header() { return "episode,n,N,e_inf,e_T,e_T_mean,avg_cost,steps,terminated"; }

std::string metrics_csv_row(int episode, const StabilityReport& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", episode, field(r.n), field(r.N), field(r.e_inf),
                     field(r.e_T), field(r.e_T_mean), r.avg_cost, r.steps, r.terminated ? 1 : 0);
}

}  // namespace nfq
