#include "hsdid/fe.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "hsdid/error.hpp"

namespace hsdid {

std::string_view to_string(HardshipMode m) {
  switch (m) {
    case HardshipMode::None: return "housing_stress_only";
    case HardshipMode::Pooled: return "pooled_hardship";
    case HardshipMode::Separate: return "separate_indicators";
  }
  return "unknown";
}

std::vector<std::string> FeSpec::hardship_regressors() const {
  std::vector<std::string> out{std::string(cols::kHousingStress)};
  if (hardship == HardshipMode::Pooled) out.emplace_back(cols::kHardship);
  if (hardship == HardshipMode::Separate) {
    for (auto c : cols::kNonHousingIndicators) out.emplace_back(c);
  }
  return out;
}

namespace {

struct SampleRows {
  std::vector<std::size_t> rows;
  std::size_t missing = 0;
  std::size_t singletons = 0;
  std::map<std::string, std::size_t> missing_by_column;
};

SampleRows select_sample(const PanelDataset& ds, const FeSpec& spec) {
  std::vector<std::string> needed{spec.outcome};
  for (auto& r : spec.hardship_regressors()) needed.push_back(r);
  for (auto& c : spec.controls.source_columns()) needed.push_back(c);

  SampleRows s;
  std::vector<const Column*> cols;
  for (const auto& name : needed) cols.push_back(&ds.column(name));
  std::vector<std::size_t> complete;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    bool ok = true;
    for (const Column* c : cols) {
      if (c->is_missing(r)) {
        ++s.missing_by_column[c->name()];
        ok = false;
      }
    }
    if (ok) {
      complete.push_back(r);
    } else {
      ++s.missing;
    }
  }
  // Singleton persons carry no within variation.
  const auto& persons = ds.person_ids();
  std::unordered_map<PersonId, std::size_t> counts;
  for (auto r : complete) ++counts[persons[r]];
  for (auto r : complete) {
    if (counts[persons[r]] >= 2) {
      s.rows.push_back(r);
    }
  }
  for (const auto& [p, c] : counts) s.singletons += (c == 1);
  return s;
}

std::string missing_summary(const std::map<std::string, std::size_t>& m) {
  std::string out;
  for (const auto& [k, v] : m) out += (out.empty() ? "" : ", ") + k + "=" + std::to_string(v);
  return out.empty() ? "none" : out;
}

}  // namespace

DesignMatrixd build_fe_design(const PanelDataset& ds, const FeSpec& spec, bool person_dummies,
                              FeResult* accounting) {
  const auto sample = select_sample(ds, spec);
  std::size_t persons_in_sample = 0;
  {
    std::vector<PersonId> ps;
    for (auto r : sample.rows) ps.push_back(ds.person_ids()[r]);
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    persons_in_sample = ps.size();
  }
  if (accounting) {
    accounting->rows_input = ds.rows();
    accounting->rows_used = sample.rows.size();
    accounting->rows_missing = sample.missing;
    accounting->singletons_dropped = sample.singletons;
    accounting->missing_by_column = sample.missing_by_column;
    accounting->individuals = persons_in_sample;
  }
  if (sample.rows.empty()) {
    throw EstimationError("no complete rows after listwise deletion (missing: " +
                          missing_summary(sample.missing_by_column) + ")");
  }
  if (persons_in_sample < 2) throw EstimationError("fixed effects need at least two individuals");

  const auto hardship = spec.hardship_regressors();
  const auto control_labels = spec.controls.labels();
  std::vector<int> sample_years;
  for (auto r : sample.rows) sample_years.push_back(ds.years()[r]);
  const auto years = distinct_sorted(sample_years);

  std::vector<std::string> names = hardship;
  names.insert(names.end(), control_labels.begin(), control_labels.end());
  if (spec.year_dummies) {
    for (std::size_t i = 1; i < years.size(); ++i) names.push_back(dummy_label("year", std::to_string(years[i])));
  }
  std::vector<PersonId> person_levels;
  if (person_dummies) {
    for (auto r : sample.rows) person_levels.push_back(ds.person_ids()[r]);
    person_levels.erase(std::unique(person_levels.begin(), person_levels.end()), person_levels.end());
    for (auto p : person_levels) names.push_back(dummy_label("person", std::to_string(p)));
  }

  const auto n = static_cast<Eigen::Index>(sample.rows.size());
  const auto k = static_cast<Eigen::Index>(names.size());
  DesignMatrixd dm;
  dm.X = Eigen::MatrixXd::Zero(n, k);
  dm.y.resize(n);
  dm.column_names = names;
  std::vector<const Column*> hcols;
  for (const auto& h : hardship) hcols.push_back(&ds.column(h));
  const Column& outcome = ds.column(spec.outcome);
  std::vector<double> ctrl(control_labels.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = sample.rows[static_cast<std::size_t>(i)];
    Eigen::Index j = 0;
    for (const Column* c : hcols) dm.X(i, j++) = *c->number(r);
    fill_controls(ds, r, spec.controls, ctrl);
    for (double v : ctrl) dm.X(i, j++) = v;
    if (spec.year_dummies) {
      for (std::size_t y = 1; y < years.size(); ++y, ++j) dm.X(i, j) = ds.years()[r] == years[y] ? 1.0 : 0.0;
    }
    if (person_dummies) {
      auto it = std::lower_bound(person_levels.begin(), person_levels.end(), ds.person_ids()[r]);
      dm.X(i, j + (it - person_levels.begin())) = 1.0;
    }
    dm.y[i] = *outcome.number(r);
    dm.cluster_ids.push_back(ds.person_ids()[r]);
    dm.row_keys.push_back({ds.person_ids()[r], ds.years()[r]});
  }
  return dm;
}

FeResult fit_twoway_fe(const PanelDataset& ds, const FeSpec& spec) {
  FeResult res;
  res.spec = spec;
  const auto dm = build_fe_design(ds, spec, false, &res);
  WithinStats stats;
  const auto within = within_transform(dm, dm.cluster_ids, &stats);
  OlsOptions opts;
  opts.cluster = true;
  opts.absorbed_df = static_cast<Eigen::Index>(stats.entities);
  res.fit = fit_ols(within, opts);

  std::vector<std::string> joint;
  for (const auto& h : spec.hardship_regressors()) {
    if (res.fit.index_of(h)) joint.push_back(h);
  }
  if (joint.empty()) {
    res.hardship_joint.F = std::numeric_limits<double>::quiet_NaN();
    res.hardship_joint.p = std::numeric_limits<double>::quiet_NaN();
  } else {
    res.hardship_joint = wald_f(res.fit, joint);
  }
  return res;
}

double standardize_effect(double coefficient, double population_sd) {
  if (!(population_sd > 0.0)) throw InputError("population SD must be positive");
  return coefficient / population_sd;
}

std::vector<BaselineColumn> baseline_regressions(const PanelDataset& derived, const FeSpec& base) {
  std::vector<BaselineColumn> out;
  for (Tenure t : kTenures) {
    const auto part = subset(derived, [&](const ObservationRef& o) {
      auto v = o.category(cols::kTenure);
      return v && *v == to_string(t);
    });
    for (HardshipMode m : {HardshipMode::None, HardshipMode::Pooled, HardshipMode::Separate}) {
      FeSpec spec = base;
      spec.hardship = m;
      out.push_back({t, m, fit_twoway_fe(part, spec)});
    }
  }
  return out;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace

std::string format_baseline_table(const std::vector<BaselineColumn>& columns) {
  const std::vector<std::pair<std::string, std::string>> rows{
      {std::string(cols::kHousingStress), "Housing stress"},
      {std::string(cols::kHardship), "Financial hardship"},
      {std::string(cols::kBills), "Could not pay bills"},
      {std::string(cols::kPawned), "Sold/pawned something"},
      {std::string(cols::kMeals), "Went without meals"},
      {std::string(cols::kHeating), "Went without heating"},
      {std::string(cols::kFriends), "Help from friends/family"},
      {std::string(cols::kWelfare), "Help from community"},
      {std::string(cols::kCannotRaise), "Cannot raise emergency money"},
  };
  constexpr std::size_t lw = 30, cw = 12;
  std::ostringstream out;
  out << "Dependent variable: " << (columns.empty() ? std::string("") : columns.front().result.spec.outcome)
      << "\n";
  out << pad_right("", lw);
  for (const auto& c : columns) out << pad(std::string(to_string(c.tenure)), cw);
  out << "\n" << pad_right("", lw);
  for (std::size_t i = 0; i < columns.size(); ++i) out << pad("(" + std::to_string(i + 1) + ")", cw);
  out << "\n" << std::string(lw + cw * columns.size(), '-') << "\n";
  for (const auto& [label, title] : rows) {
    bool any = std::any_of(columns.begin(), columns.end(),
                           [&](const BaselineColumn& c) { return c.result.fit.index_of(label).has_value(); });
    if (!any) continue;
    out << pad_right(title, lw);
    for (const auto& c : columns) {
      auto j = c.result.fit.index_of(label);
      out << pad(j ? fmt("%.2f", c.result.fit.beta[*j]) + significance_stars(c.result.fit.p_values[*j]) : "", cw);
    }
    out << "\n" << pad_right("", lw);
    for (const auto& c : columns) {
      auto j = c.result.fit.index_of(label);
      out << pad(j ? "(" + fmt("%.2f", c.result.fit.se[*j]) + ")" : "", cw);
    }
    out << "\n";
  }
  out << std::string(lw + cw * columns.size(), '-') << "\n";
  auto footer = [&](const std::string& title, auto cell) {
    out << pad_right(title, lw);
    for (const auto& c : columns) out << pad(cell(c.result), cw);
    out << "\n";
  };
  footer("Controls", [](const FeResult&) { return std::string("Yes"); });
  footer("Individual FEs", [](const FeResult&) { return std::string("Yes"); });
  footer("Year dummies", [](const FeResult& r) { return std::string(r.spec.year_dummies ? "Yes" : "No"); });
  footer("Individuals", [](const FeResult& r) { return std::to_string(r.individuals); });
  footer("Degrees of freedom", [](const FeResult& r) { return std::to_string(r.fit.df_residual); });
  footer("R-Squared", [](const FeResult& r) { return fmt("%.4f", r.fit.r_squared_within); });
  footer("F-Statistic", [](const FeResult& r) { return fmt("%.2f", r.hardship_joint.F); });
  out << "* p<0.05; ** p<0.01; *** p<0.001. Cluster-robust SEs (individual) in parentheses.\n";
  return out.str();
}

}  // namespace hsdid
