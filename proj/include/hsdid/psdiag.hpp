#pragma once

// Propensity scores by logistic regression (IRLS) and 20-bin common-support
// histograms per group.

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsdid/design.hpp"
#include "hsdid/error.hpp"
#include "hsdid/match.hpp"

namespace hsdid {

/// Complete or quasi-complete separation: coefficients diverge.
class SeparationError : public EstimationError {
 public:
  SeparationError(const std::string& column, double value);
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class ConvergenceError : public EstimationError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : EstimationError(what), trace_(std::move(trace)) {}
  /// Max absolute score component after each iteration.
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

struct LogisticOptions {
  double tolerance = 1e-8;
  int max_iterations = 50;
  double separation_threshold = 30.0;
};

struct LogisticFit {
  std::vector<std::string> column_names;
  std::vector<std::string> dropped_columns;
  Eigen::VectorXd theta;
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;
  double log_likelihood = 0.0;
  /// After each accepted step, starting at theta = 0. Non-decreasing up to
  /// rounding (1e-12 relative).
  std::vector<double> log_likelihood_trace;
  Eigen::VectorXd probabilities;
};

/// Bernoulli log-likelihood of `label` under logistic(W theta).
double logistic_log_likelihood(const Eigen::MatrixXd& W, const Eigen::VectorXd& label,
                               const Eigen::VectorXd& theta);

/// Newton / IRLS with step halving. Collinear columns are dropped first.
LogisticFit fit_logistic(const Eigen::MatrixXd& W, const Eigen::VectorXd& label,
                         std::vector<std::string> column_names, const LogisticOptions& opts = {});

struct SupportHistogram {
  static constexpr int kBins = 20;
  int event_time = 0;
  std::array<std::size_t, kBins> control{};
  std::array<std::size_t, kBins> treat{};
  /// Bins where exactly one group has observations.
  std::array<bool, kBins> no_overlap{};
  double control_no_overlap_share = 0.0;
  double treat_no_overlap_share = 0.0;

  static double bin_low(int b) { return static_cast<double>(b) / kBins; }
  static double bin_high(int b) { return static_cast<double>(b + 1) / kBins; }
  static int bin_of(double p);
};

SupportHistogram common_support(const LogisticFit& fit, std::span<const Group> groups, int event_time);

struct SupportAssessment {
  Tenure tenure = Tenure::Renter;
  Subgroup subgroup = Subgroup::Low;
  int event_time = 0;
  LogisticFit fit;
  SupportHistogram histogram;
};

/// Treat-vs-control logistic model on the subsample rows at one event time,
/// with intercept, controls and event-calendar-year indicators.
SupportAssessment assess_common_support(const MatchedSubsample& ms, int event_time,
                                        const ControlSpec& controls = ControlSpec::standard());

/// tenure,subgroup,event_time,group,bin_low,bin_high,count
std::string histogram_csv_header();
std::string histogram_csv_rows(const SupportAssessment& a);

}  // namespace hsdid
