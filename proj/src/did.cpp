#include "hsdid/did.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "hsdid/error.hpp"

namespace hsdid {

namespace {

std::vector<int> event_years(const MatchedSubsample& ms) {
  std::vector<int> ys;
  for (const auto& c : ms.candidates) ys.push_back(c.window.event_year());
  return distinct_sorted(ys);
}

}  // namespace

DesignMatrixd build_design(const MatchedSubsample& ms, const DidOptions& opts) {
  if (ms.persons(Group::Treat) == 0 || ms.persons(Group::Control) == 0) {
    throw EstimationError("matched subsample " + std::string(to_string(ms.tenure)) + "/" +
                          std::string(to_string(ms.subgroup)) + " has an empty group");
  }
  using namespace did_terms;
  std::vector<std::string> names{kIntercept, kTreat, kPre, kTreatPre, kPost, kTreatPost};
  const auto control_labels = opts.controls.labels();
  names.insert(names.end(), control_labels.begin(), control_labels.end());
  const auto years = opts.event_year_dummies ? event_years(ms) : std::vector<int>{};
  for (std::size_t i = 1; i < years.size(); ++i) names.push_back(dummy_label("event_year", std::to_string(years[i])));

  const auto n = static_cast<Eigen::Index>(3 * ms.candidates.size());
  DesignMatrixd dm;
  dm.X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));
  dm.y.resize(n);
  dm.column_names = names;
  dm.cluster_ids.reserve(static_cast<std::size_t>(n));
  dm.row_keys.reserve(static_cast<std::size_t>(n));
  const Column& outcome = ms.data.column(opts.outcome);
  std::vector<double> ctrl(control_labels.size());
  Eigen::Index i = 0;
  for (const auto& c : ms.candidates) {
    const double treat = c.group == Group::Treat ? 1.0 : 0.0;
    for (std::size_t e = 0; e < 3; ++e, ++i) {
      const auto r = c.window.rows[e];
      const int t = Window::event_times[e];
      auto y = outcome.number(r);
      if (!y) throw InputError("outcome missing in matched window");
      dm.y[i] = *y;
      dm.X(i, 0) = 1.0;
      dm.X(i, 1) = treat;
      dm.X(i, 2) = t == -1 ? 1.0 : 0.0;
      dm.X(i, 3) = treat * dm.X(i, 2);
      dm.X(i, 4) = t == 0 ? 1.0 : 0.0;
      dm.X(i, 5) = treat * dm.X(i, 4);
      fill_controls(ms.data, r, opts.controls, ctrl);
      Eigen::Index j = 6;
      for (double v : ctrl) dm.X(i, j++) = v;
      for (std::size_t yv = 1; yv < years.size(); ++yv, ++j) {
        dm.X(i, j) = c.window.event_year() == years[yv] ? 1.0 : 0.0;
      }
      dm.cluster_ids.push_back(c.window.person_id);
      dm.row_keys.push_back({c.window.person_id, c.window.years[e]});
    }
  }
  return dm;
}

namespace {

DidTest make_test(const FitResultd& fit, const std::string& label) {
  DidTest t;
  auto j = fit.index_of(label);
  if (!j) throw EstimationError("coefficient '" + label + "' not identified");
  t.estimate = fit.beta[*j];
  t.se = fit.se[*j];
  if (t.se > 0.0) {
    const auto tt = t_test(fit, label);
    t.t = tt.t;
    t.p = tt.p;
  } else {
    t.t = std::numeric_limits<double>::quiet_NaN();
    t.p = std::numeric_limits<double>::quiet_NaN();
  }
  return t;
}

double coef_or_zero(const FitResultd& fit, const std::string& label) {
  auto j = fit.index_of(label);
  return j ? fit.beta[*j] : 0.0;
}

}  // namespace

DidResult fit_did(const MatchedSubsample& ms, const DidOptions& opts) {
  const auto dm = build_design(ms, opts);
  DidResult r;
  r.tenure = ms.tenure;
  r.subgroup = ms.subgroup;
  r.treat_persons = ms.persons(Group::Treat);
  r.control_persons = ms.persons(Group::Control);
  OlsOptions o;
  o.cluster = true;
  r.fit = fit_ols(dm, o);

  using namespace did_terms;
  for (const auto* label : {&kIntercept, &kTreat, &kPre, &kTreatPre, &kPost, &kTreatPost}) {
    if (!r.fit.index_of(*label)) throw EstimationError("DID term '" + *label + "' is collinear");
  }
  r.alpha1 = r.fit.coefficient(kIntercept);
  r.alpha2 = r.fit.coefficient(kTreat);
  r.gamma1 = r.fit.coefficient(kPre);
  r.gamma2 = r.fit.coefficient(kTreatPre);
  r.delta = r.fit.coefficient(kPost);
  r.tau = r.fit.coefficient(kTreatPost);
  r.parallel_trends = make_test(r.fit, kTreatPre);
  r.treatment_effect = make_test(r.fit, kTreatPost);

  // Per-period means of every non-event-time column, pooled over both groups.
  constexpr Eigen::Index kFirstControl = 6;
  const Eigen::Index kx = dm.cols() - kFirstControl;
  std::array<Eigen::VectorXd, 3> xbar;
  std::array<double, 3> count{};
  for (auto& v : xbar) v = Eigen::VectorXd::Zero(kx);
  for (Eigen::Index i = 0; i < dm.rows(); ++i) {
    const auto e = static_cast<std::size_t>(i % 3);
    xbar[e] += dm.X.row(i).tail(kx).transpose();
    count[e] += 1.0;
  }
  Eigen::VectorXd b(kx);
  for (Eigen::Index j = 0; j < kx; ++j) {
    b[j] = coef_or_zero(r.fit, dm.column_names[static_cast<std::size_t>(kFirstControl + j)]);
  }
  for (std::size_t e = 0; e < 3; ++e) {
    const double xb = count[e] > 0 ? (xbar[e] / count[e]).dot(b) : 0.0;
    const int t = Window::event_times[e];
    for (std::size_t g = 0; g < 2; ++g) {
      const double treat = g == 1 ? 1.0 : 0.0;
      r.predicted_means[g][e] = r.alpha1 + r.alpha2 * treat + (t == -1 ? r.gamma1 + r.gamma2 * treat : 0.0) +
                                (t == 0 ? r.delta + r.tau * treat : 0.0) + xb;
    }
  }
  return r;
}

TestTable parallel_trends_report(const std::map<DidKey, DidResult>& results) {
  TestTable t;
  for (const auto& [key, r] : results) {
    t.columns.push_back(std::string(to_string(key.first)) + ":" + std::string(to_string(key.second)));
    t.parallel_trends.push_back(r.parallel_trends);
    t.treatment_effect.push_back(r.treatment_effect);
  }
  return t;
}

namespace {
std::string fmt2(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace

std::string format_test_table(const TestTable& table) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-18s %-9s", "Test", "");
  out << buf;
  for (const auto& c : table.columns) {
    std::snprintf(buf, sizeof buf, " %16s", c.c_str());
    out << buf;
  }
  out << "\n";
  auto block = [&](const char* name, const std::vector<DidTest>& tests) {
    std::snprintf(buf, sizeof buf, "%-18s %-9s", name, "Estimate");
    out << buf;
    for (const auto& t : tests) {
      std::snprintf(buf, sizeof buf, " %16s", fmt2(t.estimate).c_str());
      out << buf;
    }
    out << "\n";
    std::snprintf(buf, sizeof buf, "%-18s %-9s", "", "p-value");
    out << buf;
    for (const auto& t : tests) {
      std::snprintf(buf, sizeof buf, " %16s", fmt2(t.p).c_str());
      out << buf;
    }
    out << "\n";
  };
  block("Parallel Trends", table.parallel_trends);
  block("Treatment Effects", table.treatment_effect);
  return out.str();
}

std::string predicted_means_csv(const DidResult& r) {
  std::ostringstream out;
  out << "group,event_time,predicted\n";
  char buf[40];
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t e = 0; e < 3; ++e) {
      std::snprintf(buf, sizeof buf, "%.17g", r.predicted_means[g][e]);
      out << (g == 1 ? "treat" : "control") << ',' << Window::event_times[e] << ',' << buf << '\n';
    }
  }
  return out.str();
}

}  // namespace hsdid
