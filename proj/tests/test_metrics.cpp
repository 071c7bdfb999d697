#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "nfq/errors.hpp"
#include "nfq/metrics.hpp"

using namespace nfq;

namespace {

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

TrajectoryRecord from_degrees(const std::vector<double>& angles) {
  TrajectoryRecord r;
  for (const double a : angles) {
    r.observations.push_back(Observation::from_angle(0.0, 0.0, rad(a), 0.0));
    r.actions.push_back(0.0);
    r.costs.push_back(0.01);
  }
  return r;
}

// Piecewise-constant angle profile: {length, degrees} segments.
std::vector<double> profile(std::initializer_list<std::pair<int, double>> segments) {
  std::vector<double> out;
  for (const auto& [len, deg] : segments) out.insert(out.end(), std::size_t(len), deg);
  return out;
}

const doctest::Approx exact(double v) { return doctest::Approx(v).epsilon(1e-12); }

}  // namespace

TEST_CASE("always inside the band") {
  std::vector<double> angles;
  for (int k = 0; k < 400; ++k) angles.push_back(k % 2 ? 4.0 : -6.0);
  const StabilityReport r = stability_metrics(from_degrees(angles));
  CHECK(r.n == 0);
  CHECK(r.N == 0);
  CHECK(*r.e_inf == exact(5.0));
  CHECK(*r.e_T == exact(6.0));
}

TEST_CASE("never inside the band") {
  const StabilityReport r = stability_metrics(from_degrees(profile({{400, 90.0}})));
  CHECK_FALSE(r.n);
  CHECK_FALSE(r.N);
  CHECK_FALSE(r.e_inf);
  CHECK_FALSE(r.e_T);
  CHECK_FALSE(r.diagnostic.empty());
}

TEST_CASE("swing-up then constant offset") {
  const StabilityReport r = stability_metrics(from_degrees(profile({{59, 180.0}, {341, 2.0}})));
  CHECK(r.n == 59);
  CHECK(r.N == 59);
  CHECK(*r.e_inf == exact(2.0));
  CHECK(*r.e_T == exact(2.0));
  CHECK(*r.e_T_mean == exact(2.0));
}

TEST_CASE("enter, leave and re-enter") {
  const StabilityReport r =
      stability_metrics(from_degrees(profile({{70, 150.0}, {30, 5.0}, {20, 30.0}, {280, 1.0}})));
  CHECK(r.n == 70);
  CHECK(r.N == 120);
  CHECK(*r.e_inf == exact(1.0));
}

TEST_CASE("late settling moves the window to N + 20") {
  // N = 250 > 200: window from step 270 sees only the 3 degree tail.
  const StabilityReport r =
      stability_metrics(from_degrees(profile({{250, 170.0}, {20, 9.0}, {130, 3.0}})));
  CHECK(r.N == 250);
  CHECK(*r.e_inf == exact(3.0));
  CHECK(*r.e_T == exact(3.0));
}

TEST_CASE("window mean and maximum differ") {
  std::vector<double> angles = profile({{10, 120.0}, {190, 8.0}});
  for (int k = 0; k < 100; ++k) angles.push_back(k % 2 ? 3.0 : -1.0);
  const StabilityReport r = stability_metrics(from_degrees(angles));
  CHECK(r.n == 10);
  CHECK(r.N == 10);
  CHECK(*r.e_inf == exact(2.0));
  CHECK(*r.e_T == exact(3.0));
  CHECK(*r.e_inf <= *r.e_T);
}

TEST_CASE("left the band at the end") {
  const StabilityReport r = stability_metrics(from_degrees(profile({{50, 180.0}, {300, 2.0}, {50, 40.0}})));
  CHECK(r.n == 50);
  CHECK_FALSE(r.N);
  CHECK_FALSE(r.e_inf);
  CHECK_FALSE(r.e_T);
}

TEST_CASE("episode too short for the window") {
  const StabilityReport r = stability_metrics(from_degrees(profile({{50, 180.0}, {100, 2.0}})));
  CHECK(r.N == 50);
  CHECK_FALSE(r.e_inf);
  CHECK(r.diagnostic.find("empty") != std::string::npos);
}

TEST_CASE("cost averages") {
  TrajectoryRecord r = from_degrees(profile({{400, 180.0}}));
  CHECK(avg_cost_per_step(r) == exact(0.01));
  TrajectoryRecord shortened = from_degrees(profile({{10, 180.0}}));
  shortened.costs.back() = 1.0;
  shortened.terminated = true;
  CHECK(avg_cost_per_step(shortened) == exact(0.109));
  CHECK_THROWS_AS(stability_metrics(TrajectoryRecord{}), InputError);
  CHECK(rad(10.0) == doctest::Approx(0.1745).epsilon(1e-3));
  CHECK(degrees(0.1745) == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("aggregate_curves") {
  const CurveStats one = aggregate_curves({{0.1, 0.2, 0.3}});
  CHECK(one.mean == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(one.std == std::vector<double>{0.0, 0.0, 0.0});

  const CurveStats two = aggregate_curves({{0.01, 0.01}, {0.03, 0.03}});
  CHECK(two.mean[0] == exact(0.02));
  CHECK(two.std[1] == exact(0.01));

  const CurveStats uneven = aggregate_curves({{1.0, 2.0, 3.0}, {3.0}});
  CHECK(uneven.mean.size() == 3);
  CHECK(uneven.mean[0] == 2.0);
  CHECK(uneven.mean[2] == 3.0);
  CHECK(uneven.count == std::vector<int>{2, 1, 1});
}

TEST_CASE("summary and csv rows") {
  const StabilityReport a = stability_metrics(from_degrees(profile({{59, 180.0}, {341, 2.0}})));
  const StabilityReport b = stability_metrics(from_degrees(profile({{400, 90.0}})));
  const ReportSummary s = summarize({a, b});
  CHECK(s.count == 2);
  CHECK(s.N.present == 1);
  CHECK(*s.N.mean == 59.0);
  CHECK(*s.N.std == 0.0);
  CHECK(*s.avg_cost.mean == exact(0.01));

  CHECK(metrics_csv_header() == "episode,n,N,e_inf,e_T,e_T_mean,avg_cost,steps,terminated");
  const std::string row = metrics_csv_row(3, b);
  CHECK(row.rfind("3,,,,,,", 0) == 0);
  CHECK(metrics_csv_row(1, a).rfind("1,59,59,2", 0) == 0);
}
