// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any fails.
// Usage: hsdid_acceptance <path to hsdid CLI>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hsdid/derive.hpp"
#include "hsdid/did.hpp"
#include "hsdid/error.hpp"
#include "hsdid/fe.hpp"
#include "hsdid/match.hpp"
#include "hsdid/psdiag.hpp"
#include "hsdid/sim.hpp"
#include "oracles.hpp"

using namespace hsdid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 30 persons x 5 years with person and year effects and two binary regressors.
PanelDataset lsdv_panel() {
  std::mt19937_64 g(30);
  std::normal_distribution<double> z;
  std::bernoulli_distribution coin(0.35);
  std::vector<PersonId> persons;
  std::vector<int> years;
  Column y(std::string(cols::kMcs), ColumnKind::Real);
  Column hs(std::string(cols::kHousingStress), ColumnKind::Boolean);
  Column hd(std::string(cols::kHardship), ColumnKind::Boolean);
  Column inc(std::string(cols::kLogEqIncome), ColumnKind::Real);
  for (int p = 1; p <= 30; ++p) {
    const double alpha = 50 + 7 * z(g);
    for (int t = 0; t < 5; ++t) {
      const bool hard = coin(g) || (alpha < 45 && coin(g));
      const bool stress = hard && coin(g);
      const double li = 10.5 + 0.3 * z(g) + (alpha - 50) * 0.01;
      persons.push_back(p);
      years.push_back(2001 + t);
      hs.push_bool(stress);
      hd.push_bool(hard);
      inc.push_number(li);
      y.push_number(alpha + 0.4 * t - 1.8 * stress - 1.4 * hard + 0.9 * li + z(g));
    }
  }
  return PanelDataset::from_columns(persons, years, {y, hs, hd, inc});
}

Outcome ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ds = lsdv_panel();
  FeSpec spec;
  spec.controls = ControlSpec::none();
  spec.controls.numeric = {std::string(cols::kLogEqIncome)};
  const auto fe = fit_twoway_fe(ds, spec);
  OlsOptions o;
  o.cluster = false;
  const auto lsdv = fit_ols(build_fe_design(ds, spec, true), o);
  double worst = 0.0;
  for (const auto& name : fe.fit.column_names) {
    worst = std::max(worst, std::abs(fe.fit.coefficient(name) - lsdv.coefficient(name)));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-8 && secs < 1.0 && fe.fit.column_names.size() == 7,
          "max |dbeta| = " + fmt("%.2e", worst) + ", " + fmt("%.3f", secs) + " s"};
}

Outcome ac2() {
  // 12 rows, 3 clusters of 4.
  const double x1[12] = {0.3, -1.2, 0.8, 2.1, -0.4, 1.5, 0.0, -2.2, 0.9, 1.1, -0.7, 0.2};
  const double x2[12] = {1, 0, 0, 1, 1, 1, 0, 0, 1, 0, 1, 0};
  const double y[12] = {2.1, -0.5, 1.9, 4.4, 0.7, 3.9, 0.2, -2.8, 3.1, 1.6, 0.8, 0.1};
  DesignMatrixd dm;
  dm.X.resize(12, 3);
  dm.y.resize(12);
  for (int i = 0; i < 12; ++i) {
    dm.X.row(i) << 1.0, x1[i], x2[i];
    dm.y[i] = y[i];
    dm.cluster_ids.push_back(i / 4);
  }
  dm.column_names = {"intercept", "x1", "x2"};
  const auto fit = fit_ols(dm);
  const double diff = (fit.vcov - oracle::cr1_vcov(dm.X, dm.y, dm.cluster_ids)).cwiseAbs().maxCoeff();

  std::mt19937_64 g(2);
  std::normal_distribution<double> z;
  int bad = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 20 + rep % 30, k = 2 + rep % 4, G = 3 + rep % 8;
    DesignMatrixd r;
    r.X.resize(n, k);
    r.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      r.X(i, 0) = 1.0;
      for (Eigen::Index j = 1; j < k; ++j) r.X(i, j) = z(g);
      r.y[i] = r.X.row(i).sum() + z(g) * (1 + std::abs(r.X(i, k - 1)));
      r.cluster_ids.push_back(i % G);
    }
    for (Eigen::Index j = 0; j < k; ++j) r.column_names.push_back("x" + std::to_string(j));
    const auto f = fit_ols(r);
    const bool symmetric = (f.vcov - f.vcov.transpose()).cwiseAbs().maxCoeff() == 0.0;
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(f.vcov).eigenvalues().minCoeff();
    if (!symmetric || min_eig < -1e-12 * std::max(1.0, f.vcov.norm())) ++bad;
  }
  return {diff < 1e-10 && bad == 0,
          "oracle diff = " + fmt("%.2e", diff) + ", non-PSD fixtures = " + std::to_string(bad) + "/100"};
}

DgpConfig matched(double tau, double pre_trend = 0.0) {
  DgpConfig cfg;
  cfg.mode = DgpMode::Matched;
  cfg.n_treat = 500;
  cfg.n_control = 1000;
  cfg.tau = tau;
  cfg.theta = -1.43;
  cfg.pre_trend_slope = pre_trend;
  return cfg;
}

Outcome ac3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = monte_carlo(matched(-2.05), 200, McPipeline::Did);
  const auto& tau = rep.estimand("tau");
  const double secs = seconds_since(t0);
  const bool ok = std::abs(tau.bias) < 0.15 && tau.coverage95 >= 0.90 && tau.coverage95 <= 0.98 && secs < 120 &&
                  rep.failures == 0;
  return {ok, "bias = " + fmt("%.4f", tau.bias) + ", coverage = " + fmt("%.3f", tau.coverage95) + ", " +
                  fmt("%.1f", secs) + " s"};
}

Outcome ac4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = monte_carlo(matched(0.0), 500, McPipeline::Did);
  const double rt = rep.estimand("tau").reject05, rg = rep.estimand("gamma2").reject05;
  const double secs = seconds_since(t0);
  const bool ok = rt >= 0.03 && rt <= 0.08 && rg >= 0.03 && rg <= 0.08 && secs < 180 && rep.failures == 0;
  return {ok, "tau size = " + fmt("%.3f", rt) + ", gamma2 size = " + fmt("%.3f", rg) + ", " + fmt("%.1f", secs) +
                  " s"};
}

Outcome ac5() {
  const auto rep = monte_carlo(matched(-2.05, -1.5), 500, McPipeline::Did);
  const double power = rep.estimand("gamma2").reject10;
  return {power >= 0.8 && rep.failures == 0, "gamma2 rejection at 10% = " + fmt("%.3f", power)};
}

Outcome ac6() {
  DgpConfig cfg;  // free mode: hardship is positively associated with housing stress, theta < 0
  const auto rep = monte_carlo(cfg, 200, McPipeline::Fe);
  const auto& e1 = rep.estimand("tau_no_hardship");
  const auto& e2 = rep.estimand("tau_with_hardship");
  std::size_t more_negative = 0;
  for (std::size_t r = 0; r < e1.estimates.size(); ++r) more_negative += e1.estimates[r] < e2.estimates[r];
  const double share = static_cast<double>(more_negative) / static_cast<double>(e1.estimates.size());
  return {share >= 0.95 && rep.failures == 0 && cfg.theta < 0,
          "no-hardship estimate below with-hardship estimate in " + fmt("%.3f", share) + " of reps"};
}

Outcome ac7() {
  const auto norms = PopulationNorms::australian_1995();
  const auto at = compute_component_summaries(oracle::at_means(), norms);
  bool ok = at.pcs == 50.0 && at.mcs == 50.0;
  std::string detail = "means -> (" + fmt("%.6f", at.pcs) + ", " + fmt("%.6f", at.mcs) + ")";
  const struct {
    int scale;
    double pcs, mcs;
  } cases[] = {{7, 47.3, 54.9}, {0, 54.7, 47.6}};
  for (const auto& c : cases) {
    auto s = oracle::at_means();
    s[static_cast<std::size_t>(c.scale)] += oracle::kSd[c.scale];
    const auto cs = compute_component_summaries(s, norms);
    const auto [hp, hm] = oracle::hand_scores(s);
    ok = ok && std::abs(cs.pcs - hp) < 1e-6 && std::abs(cs.mcs - hm) < 1e-6 && std::abs(cs.pcs - c.pcs) < 1e-6 &&
         std::abs(cs.mcs - c.mcs) < 1e-6;
    detail += "; +1SD " + std::string(PopulationNorms::kScaleNames[static_cast<std::size_t>(c.scale)]) + " -> (" +
              fmt("%.4f", cs.pcs) + ", " + fmt("%.4f", cs.mcs) + ")";
  }
  return {ok, detail};
}

Outcome ac8() {
  const std::string path = oracle::fixture("matching_panel.csv");
  const auto derived = derive_variables(ingest_csv(path, schema_for_header(read_csv_header(path))).data).data;
  std::set<std::string> got, expected;
  for (Tenure t : kTenures) {
    for (const auto& ms : build_subsamples(derived, t, default_analysis_columns())) {
      for (const auto& c : ms.candidates) {
        got.insert(std::string(to_string(t)) + "," + std::string(to_string(ms.subgroup)) + "," +
                   std::to_string(c.window.person_id) + "," + std::string(to_string(c.group)) + "," +
                   std::to_string(c.window.event_year()));
      }
    }
  }
  std::ifstream f(oracle::fixture("matching_expected.csv"));
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    if (!line.empty()) expected.insert(line);
  }
  return {got == expected && !expected.empty(),
          std::to_string(got.size()) + " assignments, " + std::to_string(expected.size()) + " expected"};
}

Outcome ac9() {
  std::mt19937_64 g(9);
  DidOptions opts;
  opts.outcome = "y";
  opts.controls = ControlSpec::none();
  opts.event_year_dummies = false;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto ms = oracle::random_subsample(g, 5 + rep % 40, 8 + (rep * 7) % 60);
    const auto r = fit_did(ms, opts);
    // With t = -2 as the omitted period, tau is the (-2, 0) contrast and
    // tau - gamma2 the (-1, 0) contrast.
    worst = std::max(worst, std::abs(r.tau - oracle::double_difference(ms, "y", -2, 0)));
    worst = std::max(worst, std::abs((r.tau - r.gamma2) - oracle::double_difference(ms, "y", -1, 0)));
  }
  return {worst < 1e-10, "max deviation = " + fmt("%.2e", worst)};
}

Outcome ac10() {
  Eigen::MatrixXd W(8, 2);
  Eigen::VectorXd y(8);
  const double x[8] = {-1.5, -0.7, -0.2, 0.1, 0.4, 0.9, 1.3, 2.0};
  const double l[8] = {0, 0, 1, 0, 1, 0, 1, 1};
  for (int i = 0; i < 8; ++i) {
    W(i, 0) = 1.0;
    W(i, 1) = x[i];
    y[i] = l[i];
  }
  const auto fit = fit_logistic(W, y, {"intercept", "x"});
  const auto ref = oracle::logistic_grid_search(W, y);
  const double diff = (fit.theta - ref).cwiseAbs().maxCoeff();
  const double score = (W.transpose() * (y - fit.probabilities)).norm();

  Eigen::MatrixXd S(6, 2);
  S << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd ys(6);
  ys << 0, 0, 0, 1, 1, 1;
  bool separated = false;
  try {
    fit_logistic(S, ys, {"intercept", "x"});
  } catch (const SeparationError& e) {
    separated = e.column() == "x";
  }
  return {diff < 1e-4 && score < 1e-8 && separated,
          "oracle diff = " + fmt("%.2e", diff) + ", score norm = " + fmt("%.2e", score) +
              (separated ? ", separation raised" : ", separation NOT raised")};
}

Outcome ac11() {
  std::size_t datasets = 0, rows = 0, violations = 0;
  auto check = [&](const PanelDataset& raw) {
    const auto d = derive_variables(raw).data;
    violations += count_nesting_violations(d);
    rows += d.rows();
    ++datasets;
  };
  const std::string path = oracle::fixture("matching_panel.csv");
  check(ingest_csv(path, schema_for_header(read_csv_header(path))).data);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DgpConfig free_cfg;
    free_cfg.seed = seed;
    free_cfg.persons = 800;
    free_cfg.reverse_causality = seed % 2 ? 0.0 : 1.0;
    check(generate_panel(free_cfg).data);
    for (Subgroup s : kSubgroups) {
      for (Tenure t : kTenures) {
        auto m = matched(-2.05);
        m.seed = seed;
        m.subgroup = s;
        m.tenure = t;
        m.n_treat = 100;
        m.n_control = 150;
        check(generate_panel(m).data);
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(rows) + " rows of " +
                               std::to_string(datasets) + " datasets"};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Every JSON artifact under `dir`; manifests lose their timestamp.
std::map<std::string, std::string> json_artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    std::string text = slurp(e.path());
    if (e.path().filename() == "manifest.json") {
      auto j = nlohmann::ordered_json::parse(text);
      j.erase("generated_at");
      text = j.dump(2);
    }
    out[fs::relative(e.path(), dir).string()] = text;
  }
  return out;
}

Outcome ac12(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / "hsdid_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run_once = [&]() {
    const std::string sim = "\"" + cli + "\" simulate --seed 424242 --out \"" + (dir / "sim").string() + "\" > /dev/null";
    const std::string pipe = "\"" + cli + "\" pipeline --input \"" + (dir / "sim" / "simulated.csv").string() +
                             "\" --out \"" + (dir / "results").string() + "\" > /dev/null";
    return std::system(sim.c_str()) == 0 && std::system(pipe.c_str()) == 0;
  };
  if (!run_once()) return {false, "first run failed"};
  const auto first = json_artifacts(dir);
  if (!run_once()) return {false, "second run failed"};
  const auto second = json_artifacts(dir);
  std::size_t differing = 0;
  for (const auto& [name, text] : first) {
    auto it = second.find(name);
    differing += it == second.end() || it->second != text;
  }
  const bool ok = first.size() == second.size() && differing == 0 && first.size() >= 10;
  return {ok, std::to_string(first.size()) + " JSON artifacts, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "hsdid";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"LSDV equivalence (30x5)", ac1},
      {"cluster-robust sandwich oracle and PSD", ac2},
      {"DID recovery, tau = -2.05, 200 reps", ac3},
      {"test size under the null, 500 reps", ac4},
      {"pre-trend power, slope -1.5, 500 reps", ac5},
      {"omitted-hardship direction, 200 reps", ac6},
      {"MCS/PCS scoring", ac7},
      {"matching fixture assignments", ac8},
      {"DID double-difference identity, 100 subsamples", ac9},
      {"logistic oracle and separation", ac10},
      {"housing stress nests in hardship", ac11},
      {"end-to-end determinism", [&] { return ac12(cli); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] AC%zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
