#pragma once

// Event-time difference-in-differences on a matched subsample:
//   y = a1 + a2 Treat + g1 1[t=-1] + g2 Treat 1[t=-1] + d 1[t=0] + tau Treat 1[t=0] + X'b + e
// with event-calendar-year dummies in X and person-clustered errors.

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hsdid/design.hpp"
#include "hsdid/match.hpp"
#include "hsdid/ols.hpp"

namespace hsdid {

namespace did_terms {
inline const std::string kIntercept = "intercept";
inline const std::string kTreat = "treat";
inline const std::string kPre = "t_minus1";
inline const std::string kTreatPre = "treat_x_t_minus1";
inline const std::string kPost = "t0";
inline const std::string kTreatPost = "treat_x_t0";
}  // namespace did_terms

struct DidOptions {
  std::string outcome = std::string(cols::kMcs);
  ControlSpec controls = ControlSpec::standard();
  bool event_year_dummies = true;
};

/// Rows ordered by person then event time (-2, -1, 0); clusters are persons.
DesignMatrixd build_design(const MatchedSubsample& ms, const DidOptions& opts = {});

struct DidTest {
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 0.0;  // NaN when the standard error is zero
};

struct DidResult {
  Tenure tenure = Tenure::Renter;
  Subgroup subgroup = Subgroup::Low;
  std::size_t treat_persons = 0;
  std::size_t control_persons = 0;
  FitResultd fit;
  double alpha1 = 0.0, alpha2 = 0.0, gamma1 = 0.0, gamma2 = 0.0, delta = 0.0, tau = 0.0;
  DidTest parallel_trends;   // gamma2 = 0
  DidTest treatment_effect;  // tau = 0
  /// [group: control, treat][event time -2, -1, 0], controls at their per-period means.
  std::array<std::array<double, 3>, 2> predicted_means{};
};

DidResult fit_did(const MatchedSubsample& ms, const DidOptions& opts = {});

using DidKey = std::pair<Tenure, Subgroup>;

struct TestTable {
  std::vector<std::string> columns;  // "renter:low", ...
  std::vector<DidTest> parallel_trends;
  std::vector<DidTest> treatment_effect;
};

/// Parallel-trends and treatment-effect rows, one column per (tenure, subgroup).
TestTable parallel_trends_report(const std::map<DidKey, DidResult>& results);
std::string format_test_table(const TestTable& table);

/// group,event_time,predicted
std::string predicted_means_csv(const DidResult& r);

}  // namespace hsdid
