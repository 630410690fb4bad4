#pragma once

// Synthetic survey panel with known truth, and a Monte Carlo harness around
// the fixed-effects and matched DID estimators.
//
// Outcome model, per person-year:
//   MH(0) = alpha_i + lambda_t + theta * hardship + X'beta + eps
//   MH(1) = MH(0) + tau,   observed = MH(0) + D * tau,   D = housing stress

#include <cstdint>
#include <string>
#include <vector>

#include "hsdid/derive.hpp"
#include "hsdid/match.hpp"
#include "hsdid/panel.hpp"

namespace hsdid {

enum class DgpMode {
  Free,     // balanced panel, hardship from a two-state Markov chain
  Matched,  // four years per person with the event window history imposed
};

std::string_view to_string(DgpMode m);
DgpMode parse_dgp_mode(std::string_view s);

struct DgpConfig {
  DgpMode mode = DgpMode::Free;
  std::uint64_t seed = 20240601;

  // Free mode.
  std::size_t persons = 2000;
  YearRange years{2001, 2019};
  double renter_share = 0.5;
  double hardship_entry = 0.15;
  double hardship_persistence = 0.55;

  // Matched mode: every person gets this tenure and pre-event history.
  std::size_t n_treat = 500;
  std::size_t n_control = 1000;
  Tenure tenure = Tenure::Renter;
  Subgroup subgroup = Subgroup::High;
  double group_gap = 0.0;       // level shift of treat persons
  double pre_trend_slope = 0.0; // treat-only slope * (event_time + 2)

  double housing_stress_given_hardship = 0.25;
  double nonhousing_given_housing_stress = 0.8;

  double individual_sd = 7.0;
  double year_effect_sd = 1.0;
  double noise_sd = 5.0;
  double tau = -1.79;
  double theta = -1.43;
  double beta_log_income = 1.0;
  double beta_pcs_lag = 0.05;
  double beta_full_time = 0.5;
  double beta_part_time = 0.2;
  double beta_neighbourhood = -0.2;  // per quintile step above the first

  /// Outcome shock at t-1 shifts the log-odds of hardship and housing stress at t
  /// by -coefficient * eps_{t-1} / noise_sd.
  double reverse_causality = 0.0;

  /// Throws InputError when a probability leaves [0,1], an SD is negative or
  /// there are too few persons.
  void validate() const;

  /// key = value lines; '#' starts a comment. Unknown keys are errors.
  static DgpConfig parse(std::string_view text, DgpConfig base);
  static DgpConfig parse(std::string_view text);
  static DgpConfig load(const std::string& path, DgpConfig base);
  static DgpConfig load(const std::string& path);
  std::string to_text() const;
};

struct DgpTruth {
  std::vector<double> mh0;
  std::vector<double> mh1;
  std::vector<std::uint8_t> treated;  // D, aligned with the dataset rows
  double tau = 0.0;
  double theta = 0.0;
  std::vector<double> alpha;          // per row, the person effect
  std::vector<double> lambda;         // per row, the year effect
};

struct SimulatedPanel {
  PanelDataset data;
  DgpTruth truth;
};

/// Raw survey columns (money-shortage answers, emergency-money response), mcs,
/// pcs, mental_health_scale, income, household size, employment, neighbourhood
/// and tenure. Run derive_variables before estimating.
SimulatedPanel generate_panel(const DgpConfig& cfg);

/// Deterministic 64-bit mix of the seed with stream coordinates.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

enum class McPipeline { Fe, Did };

std::string_view to_string(McPipeline p);
McPipeline parse_mc_pipeline(std::string_view s);

struct McEstimand {
  std::string name;
  double truth = 0.0;
  std::vector<double> estimates;  // NaN for failed reps
  std::vector<double> std_errors;
  std::vector<double> p_values;   // against zero
  std::vector<double> df;

  double bias = 0.0;
  double empirical_sd = 0.0;
  double mean_se = 0.0;
  double coverage95 = 0.0;
  double reject10 = 0.0;
  double reject05 = 0.0;
  double reject01 = 0.0;
};

struct McReport {
  McPipeline pipeline = McPipeline::Did;
  std::size_t reps = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<McEstimand> estimands;

  const McEstimand& estimand(std::string_view name) const;
};

/// Rep r uses seed stream_seed(cfg.seed, r). The DID pipeline estimates tau and
/// gamma2 on the configured tenure and subgroup; the FE pipeline estimates the
/// housing-stress coefficient without and with the pooled hardship control.
McReport monte_carlo(const DgpConfig& cfg, std::size_t reps, McPipeline pipeline);

std::string format_mc_report(const McReport& report);

}  // namespace hsdid
