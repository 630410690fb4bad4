#include "hsdid/report.hpp"

#include <cmath>

namespace hsdid {

namespace {

Json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

}  // namespace

Json to_json(const IngestReport& r) {
  Json j;
  j["rows"] = r.rows;
  j["missing_cells"] = r.missing_count;
  j["unparseable_cells"] = r.unparseable_count;
  j["missing_by_column"] = Json::object();
  for (const auto& [k, v] : r.missing_by_column) j["missing_by_column"][k] = v;
  return j;
}

Json to_json(const DeriveReport& r) {
  Json j;
  j["rows"] = r.rows;
  j["hardship_rows"] = r.hardship_rows;
  j["housing_stress_rows"] = r.housing_stress_rows;
  j["hardship_missing_rows"] = r.hardship_missing_rows;
  j["component_summaries_computed"] = r.component_summaries_computed;
  j["negative_income_rows"] = r.negative_income_rows;
  j["nesting_violations"] = r.nesting_violations;
  return j;
}

Json to_json(const FitResultd& fit) {
  Json j;
  Json coefs = Json::array();
  for (std::size_t k = 0; k < fit.column_names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    coefs.push_back({{"term", fit.column_names[k]},
                     {"estimate", num(fit.beta[i])},
                     {"std_error", num(fit.se[i])},
                     {"t", num(fit.t_stats[i])},
                     {"p", num(fit.p_values[i])}});
  }
  j["coefficients"] = std::move(coefs);
  j["dropped_collinear"] = fit.dropped_columns;
  j["n_obs"] = fit.n_obs;
  j["df_residual"] = fit.df_residual;
  j["clustered"] = fit.clustered;
  j["n_clusters"] = fit.n_clusters;
  j["reference_df"] = fit.reference_df;
  j["rss"] = num(fit.rss);
  j["r_squared_within"] = num(fit.r_squared_within);
  return j;
}

Json to_json(const WaldTest& w) {
  return {{"F", num(w.F)}, {"p", num(w.p)}, {"q", w.q}, {"df", num(w.df)}};
}

Json to_json(const FeResult& r) {
  Json j;
  j["outcome"] = r.spec.outcome;
  j["hardship_mode"] = std::string(to_string(r.spec.hardship));
  j["rows_input"] = r.rows_input;
  j["rows_used"] = r.rows_used;
  j["rows_missing"] = r.rows_missing;
  j["singletons_dropped"] = r.singletons_dropped;
  j["individuals"] = r.individuals;
  j["missing_by_column"] = Json::object();
  for (const auto& [k, v] : r.missing_by_column) j["missing_by_column"][k] = v;
  j["fit"] = to_json(r.fit);
  j["hardship_joint_test"] = to_json(r.hardship_joint);
  return j;
}

Json to_json(const CandidateReport& r) {
  Json j;
  j["windows"] = r.windows;
  j["tenure_excluded"] = r.tenure_excluded;
  j["housing_stress_before_event"] = r.housing_stress_before_event;
  j["no_event"] = r.no_event;
  j["recovery_history"] = r.recovery_history;
  j["candidates"] = r.candidates;
  return j;
}

Json to_json(const DidTest& t) {
  return {{"estimate", num(t.estimate)}, {"std_error", num(t.se)}, {"t", num(t.t)}, {"p", num(t.p)}};
}

Json to_json(const DidResult& r) {
  Json j;
  j["tenure"] = std::string(to_string(r.tenure));
  j["subgroup"] = std::string(to_string(r.subgroup));
  j["treat_persons"] = r.treat_persons;
  j["control_persons"] = r.control_persons;
  j["coefficients"] = {{"alpha1", num(r.alpha1)}, {"alpha2", num(r.alpha2)}, {"gamma1", num(r.gamma1)},
                       {"gamma2", num(r.gamma2)}, {"delta", num(r.delta)},   {"tau", num(r.tau)}};
  j["parallel_trends"] = to_json(r.parallel_trends);
  j["treatment_effect"] = to_json(r.treatment_effect);
  Json pm = Json::array();
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t e = 0; e < 3; ++e) {
      pm.push_back({{"group", g == 1 ? "treat" : "control"},
                    {"event_time", Window::event_times[e]},
                    {"predicted", num(r.predicted_means[g][e])}});
    }
  }
  j["predicted_means"] = std::move(pm);
  j["fit"] = to_json(r.fit);
  return j;
}

Json to_json(const LogisticFit& fit) {
  Json j;
  Json coefs = Json::array();
  for (std::size_t k = 0; k < fit.column_names.size(); ++k) {
    coefs.push_back({{"term", fit.column_names[k]}, {"estimate", num(fit.theta[static_cast<Eigen::Index>(k)])}});
  }
  j["coefficients"] = std::move(coefs);
  j["dropped_collinear"] = fit.dropped_columns;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["max_abs_score"] = num(fit.max_abs_score);
  j["log_likelihood"] = num(fit.log_likelihood);
  return j;
}

Json to_json(const SupportAssessment& a) {
  Json j;
  j["tenure"] = std::string(to_string(a.tenure));
  j["subgroup"] = std::string(to_string(a.subgroup));
  j["event_time"] = a.event_time;
  j["logistic"] = to_json(a.fit);
  Json bins = Json::array();
  for (int b = 0; b < SupportHistogram::kBins; ++b) {
    const auto i = static_cast<std::size_t>(b);
    bins.push_back({{"bin_low", SupportHistogram::bin_low(b)},
                    {"bin_high", SupportHistogram::bin_high(b)},
                    {"control", a.histogram.control[i]},
                    {"treat", a.histogram.treat[i]},
                    {"no_overlap", a.histogram.no_overlap[i]}});
  }
  j["bins"] = std::move(bins);
  j["control_no_overlap_share"] = num(a.histogram.control_no_overlap_share);
  j["treat_no_overlap_share"] = num(a.histogram.treat_no_overlap_share);
  return j;
}

Json to_json(const McReport& r) {
  Json j;
  j["pipeline"] = std::string(to_string(r.pipeline));
  j["reps"] = r.reps;
  j["failures"] = r.failures;
  j["failure_messages"] = r.failure_messages;
  Json es = Json::array();
  for (const auto& e : r.estimands) {
    es.push_back({{"name", e.name},
                  {"truth", num(e.truth)},
                  {"bias", num(e.bias)},
                  {"empirical_sd", num(e.empirical_sd)},
                  {"mean_se", num(e.mean_se)},
                  {"coverage95", num(e.coverage95)},
                  {"rejection_rate", {{"0.10", num(e.reject10)}, {"0.05", num(e.reject05)}, {"0.01", num(e.reject01)}}},
                  {"estimates", vec(e.estimates)},
                  {"std_errors", vec(e.std_errors)},
                  {"p_values", vec(e.p_values)}});
  }
  j["estimands"] = std::move(es);
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace hsdid
