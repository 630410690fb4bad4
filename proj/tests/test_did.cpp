#include <doctest.h>

#include <random>

#include "hsdid/did.hpp"
#include "hsdid/error.hpp"
#include "oracles.hpp"

using namespace hsdid;

namespace {

DidOptions plain(bool year_dummies = true) {
  DidOptions o;
  o.outcome = "y";
  o.controls = ControlSpec::none();
  o.event_year_dummies = year_dummies;
  return o;
}

MatchedSubsample with_outcome(const MatchedSubsample& ms, const std::function<double(std::size_t, double)>& f) {
  const auto& y = ms.data.column("y");
  Column out("y", ColumnKind::Real);
  for (std::size_t r = 0; r < ms.data.rows(); ++r) out.push_number(f(r, *y.number(r)));
  MatchedSubsample copy = ms;
  copy.data = ms.data.with_column(out);
  return copy;
}

}  // namespace

TEST_CASE("design rows and columns") {
  std::mt19937_64 g(4);
  auto ms = oracle::random_subsample(g, 1, 1);
  ms.candidates[0].window.years = {2004, 2005, 2006};
  ms.candidates[1].window.years = {2004, 2005, 2006};
  const auto dm = build_design(ms, plain());
  // A single event year leaves no dummies.
  REQUIRE(dm.cols() == 6);
  REQUIRE(dm.rows() == 6);
  const std::vector<std::string> names{"intercept", "treat", "t_minus1", "treat_x_t_minus1", "t0", "treat_x_t0"};
  CHECK(dm.column_names == names);
  Eigen::MatrixXd expected(6, 6);
  expected << 1, 1, 0, 0, 0, 0,  //
      1, 1, 1, 1, 0, 0,          //
      1, 1, 0, 0, 1, 1,          //
      1, 0, 0, 0, 0, 0,          //
      1, 0, 1, 0, 0, 0,          //
      1, 0, 0, 0, 1, 0;
  CHECK(dm.X == expected);
  CHECK(dm.cluster_ids == std::vector<std::int64_t>{1, 1, 1, 2, 2, 2});
}

TEST_CASE("event-year dummies drop the earliest year") {
  std::mt19937_64 g(5);
  const auto ms = oracle::random_subsample(g, 20, 20);
  std::vector<int> ys;
  for (const auto& c : ms.candidates) ys.push_back(c.window.event_year());
  const auto distinct = distinct_sorted(ys);
  const auto dm = build_design(ms, plain());
  CHECK(dm.cols() == static_cast<Eigen::Index>(6 + distinct.size() - 1));
  CHECK(dm.column_names[6] == "event_year=" + std::to_string(distinct[1]));
  CHECK(build_design(ms, plain(false)).cols() == 6);
}

TEST_CASE("an empty group is an estimation error") {
  std::mt19937_64 g(6);
  CHECK_THROWS_AS(build_design(oracle::random_subsample(g, 0, 5), plain()), EstimationError);
  CHECK_THROWS_AS(fit_did(oracle::random_subsample(g, 5, 0), plain()), EstimationError);
}

TEST_CASE("coefficients equal the double differences of group means") {
  std::mt19937_64 g(7);
  for (int rep = 0; rep < 25; ++rep) {
    const auto ms = oracle::random_subsample(g, 5 + rep, 10 + 2 * rep);
    for (bool dummies : {false, true}) {
      const auto r = fit_did(ms, plain(dummies));
      CHECK(std::abs(r.tau - oracle::double_difference(ms, "y", -2, 0)) < 1e-10);
      CHECK(std::abs(r.gamma2 - oracle::double_difference(ms, "y", -2, -1)) < 1e-10);
      CHECK(std::abs((r.tau - r.gamma2) - oracle::double_difference(ms, "y", -1, 0)) < 1e-10);
    }
  }
}

TEST_CASE("predicted means reproduce the treatment contrast") {
  std::mt19937_64 g(8);
  const auto ms = oracle::random_subsample(g, 30, 60);
  const auto r = fit_did(ms, plain());
  const auto& m = r.predicted_means;
  const double dd = (m[1][2] - m[0][2]) - (m[1][0] - m[0][0]);
  CHECK(std::abs(dd - r.tau) < 1e-10);
  const double pre = (m[1][1] - m[0][1]) - (m[1][0] - m[0][0]);
  CHECK(std::abs(pre - r.gamma2) < 1e-10);
  const auto csv = predicted_means_csv(r);
  CHECK(csv.rfind("group,event_time,predicted\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("a constant shift in the outcome moves only the intercept") {
  std::mt19937_64 g(9);
  const auto ms = oracle::random_subsample(g, 25, 40);
  const auto a = fit_did(ms, plain());
  const auto b = fit_did(with_outcome(ms, [](std::size_t, double y) { return y + 12.5; }), plain());
  CHECK(std::abs(b.alpha1 - a.alpha1 - 12.5) < 1e-9);
  for (auto [x, y] : {std::pair{a.alpha2, b.alpha2}, {a.gamma1, b.gamma1}, {a.gamma2, b.gamma2},
                      {a.delta, b.delta}, {a.tau, b.tau}}) {
    CHECK(std::abs(x - y) < 1e-9);
  }
  CHECK(std::abs(a.treatment_effect.se - b.treatment_effect.se) < 1e-9);
}

TEST_CASE("swapping the group labels negates the treat interactions") {
  std::mt19937_64 g(10);
  const auto ms = oracle::random_subsample(g, 30, 30);
  auto swapped = ms;
  for (auto& c : swapped.candidates) c.group = c.group == Group::Treat ? Group::Control : Group::Treat;
  const auto a = fit_did(ms, plain(false));
  const auto b = fit_did(swapped, plain(false));
  CHECK(std::abs(a.tau + b.tau) < 1e-10);
  CHECK(std::abs(a.gamma2 + b.gamma2) < 1e-10);
  CHECK(std::abs(a.alpha2 + b.alpha2) < 1e-10);
  CHECK(std::abs(a.treatment_effect.se - b.treatment_effect.se) < 1e-10);
}

TEST_CASE("noise-free outcomes are recovered exactly") {
  std::mt19937_64 g(11);
  auto ms = oracle::random_subsample(g, 12, 18);
  std::vector<double> y(ms.data.rows());
  for (const auto& c : ms.candidates) {
    const double treat = c.group == Group::Treat ? 1.0 : 0.0;
    for (std::size_t e = 0; e < 3; ++e) {
      const int t = Window::event_times[e];
      y[c.window.rows[e]] = 50.0 - 1.0 * treat + (t == -1 ? 0.5 + 0.25 * treat : 0.0) +
                            (t == 0 ? -0.75 - 2.0 * treat : 0.0);
    }
  }
  const auto exact = with_outcome(ms, [&](std::size_t r, double) { return y[r]; });
  const auto r = fit_did(exact, plain(false));
  CHECK(std::abs(r.alpha1 - 50.0) < 1e-10);
  CHECK(std::abs(r.alpha2 + 1.0) < 1e-10);
  CHECK(std::abs(r.gamma1 - 0.5) < 1e-10);
  CHECK(std::abs(r.gamma2 - 0.25) < 1e-10);
  CHECK(std::abs(r.delta + 0.75) < 1e-10);
  CHECK(std::abs(r.tau + 2.0) < 1e-10);
  CHECK(r.treatment_effect.se < 1e-8);
  CHECK((std::isnan(r.treatment_effect.p) || r.treatment_effect.se > 0.0));
}

TEST_CASE("test table has one column per key") {
  std::mt19937_64 g(12);
  std::map<DidKey, DidResult> results;
  results[{Tenure::Renter, Subgroup::Low}] = fit_did(oracle::random_subsample(g, 10, 10), plain());
  results[{Tenure::Owner, Subgroup::High}] = fit_did(oracle::random_subsample(g, 10, 10), plain());
  const auto table = parallel_trends_report(results);
  CHECK(table.columns.size() == 2);
  const auto text = format_test_table(table);
  CHECK(text.find("Parallel Trends") != std::string::npos);
  CHECK(text.find("Treatment Effects") != std::string::npos);
}
