#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nfq/batch.hpp"
#include "nfq/observation.hpp"

namespace nfq {

// One evaluation rollout: observation s_t, action a_t and cost c_{t+1} per step.
struct TrajectoryRecord {
  std::vector<Observation> observations;
  std::vector<double> actions;
  std::vector<double> costs;
  bool terminated = false;
  std::string checkpoint;
  std::uint64_t seed = 0;

  std::size_t steps() const { return observations.size(); }
  void validate() const;

  static TrajectoryRecord from_episode(const Episode& episode, std::string checkpoint = {},
                                       std::uint64_t seed = 0);
};

struct StabilityReport {
  std::optional<int> n;
  std::optional<int> N;
  std::optional<double> e_inf;     // degrees
  std::optional<double> e_T;       // degrees, max over the window
  std::optional<double> e_T_mean;  // degrees, mean offset from the zero reference
  double avg_cost = 0.0;
  int steps = 0;
  bool terminated = false;
  std::string diagnostic;
};

struct StabilityOptions {
  double tolerance_deg = 10.0;
  int n_max = 200;
  int settle = 20;
};

StabilityReport stability_metrics(const TrajectoryRecord& traj, const StabilityOptions& options = {});

double avg_cost_per_step(const TrajectoryRecord& traj);

double degrees(double radians);

struct CurveStats {
  std::vector<double> mean;
  std::vector<double> std;  // population
  std::vector<int> count;   // runs present at each point
};

// Pointwise mean/std over runs of possibly different length. NaN entries
// count as absent.
CurveStats aggregate_curves(const std::vector<std::vector<double>>& runs);

// Mean and population std of one optional metric over several reports.
struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> std;
  int present = 0;
};

struct ReportSummary {
  MetricSummary n, N, e_inf, e_T, e_T_mean, avg_cost, steps;
  int terminated = 0;
  int count = 0;
};

ReportSummary summarize(const std::vector<StabilityReport>& reports);

// "episode,n,N,e_inf,e_T,e_T_mean,avg_cost,steps,terminated"
std::string metrics_csv_header();
std::string metrics_csv_row(int episode, const StabilityReport& report);

}  // namespace nfq
