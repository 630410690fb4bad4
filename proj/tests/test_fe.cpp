#include <doctest.h>

#include <random>

#include "hsdid/error.hpp"
#include "hsdid/fe.hpp"

using namespace hsdid;

namespace {

struct PanelSpec {
  int persons = 30;
  int years = 5;
  double hs_effect = -1.8;
  double hardship_effect = -1.4;
  double noise = 1.0;
  std::uint64_t seed = 3;
};

// Balanced panel with person and year effects and two correlated binary regressors.
PanelDataset fe_panel(const PanelSpec& s) {
  std::mt19937_64 g(s.seed);
  std::normal_distribution<double> z;
  std::bernoulli_distribution coin(0.3);
  std::vector<PersonId> persons;
  std::vector<int> years;
  Column y(std::string(cols::kMcs), ColumnKind::Real);
  Column hs(std::string(cols::kHousingStress), ColumnKind::Boolean);
  Column hd(std::string(cols::kHardship), ColumnKind::Boolean);
  std::vector<double> year_fx(static_cast<std::size_t>(s.years));
  for (auto& v : year_fx) v = z(g);
  for (int p = 1; p <= s.persons; ++p) {
    const double alpha = 50.0 + 6.0 * z(g);
    for (int t = 0; t < s.years; ++t) {
      const bool hard = coin(g) || (alpha < 46.0 && coin(g));
      const bool stress = hard && coin(g);
      persons.push_back(p);
      years.push_back(2001 + t);
      hs.push_bool(stress);
      hd.push_bool(hard);
      y.push_number(alpha + year_fx[static_cast<std::size_t>(t)] + s.hs_effect * stress +
                    s.hardship_effect * hard + s.noise * z(g));
    }
  }
  return PanelDataset::from_columns(persons, years, {y, hs, hd});
}

FeSpec bare_spec(HardshipMode m = HardshipMode::Pooled) {
  FeSpec spec;
  spec.hardship = m;
  spec.controls = ControlSpec::none();
  return spec;
}

PanelDataset replace_column(const PanelDataset& ds, Column c) { return ds.with_column(std::move(c)); }

}  // namespace

TEST_CASE("within estimator equals explicit person dummies") {
  const auto ds = fe_panel({});
  const auto spec = bare_spec();
  const auto fe = fit_twoway_fe(ds, spec);
  const auto lsdv_dm = build_fe_design(ds, spec, true);
  OlsOptions o;
  o.cluster = false;
  const auto lsdv = fit_ols(lsdv_dm, o);
  for (const auto& name : fe.fit.column_names) {
    CHECK(std::abs(fe.fit.coefficient(name) - lsdv.coefficient(name)) < 1e-8);
  }
  CHECK(std::abs(fe.fit.rss - lsdv.rss) < 1e-8 * lsdv.rss);
  CHECK(fe.fit.df_residual == lsdv.df_residual);
  CHECK(fe.fit.df_residual == 150 - 6 - 30);
  CHECK(fe.individuals == 30);
  CHECK(fe.rows_used == 150);
}

TEST_CASE("within transform") {
  DesignMatrixd dm;
  dm.X.resize(6, 2);
  dm.X << 4, 1, 4, 2, 4, 3, 7, 1, 7, 1, 7, 1;
  dm.y = Eigen::VectorXd::LinSpaced(6, 1, 6);
  dm.column_names = {"const_within", "ramp"};
  const std::vector<std::int64_t> ent{1, 1, 1, 2, 2, 2};
  WithinStats st;
  const auto w = within_transform(dm, ent, &st);
  CHECK(w.X.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.X(0, 1) == doctest::Approx(-1.0));
  CHECK(w.X(1, 1) == doctest::Approx(0.0));
  CHECK(w.X(2, 1) == doctest::Approx(1.0));
  CHECK(st.entities == 2);
  CHECK(st.singleton_entities == 0);
  const auto w2 = within_transform(w, ent);
  CHECK((w2.X - w.X).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((w2.y - w.y).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("shifting the outcome by a constant leaves slopes unchanged") {
  const auto ds = fe_panel({});
  Column shifted(std::string(cols::kMcs), ColumnKind::Real);
  for (std::size_t r = 0; r < ds.rows(); ++r) shifted.push_number(*ds.column(cols::kMcs).number(r) + 37.5);
  const auto a = fit_twoway_fe(ds, bare_spec());
  const auto b = fit_twoway_fe(replace_column(ds, shifted), bare_spec());
  CHECK((a.fit.beta - b.fit.beta).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a.fit.se - b.fit.se).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("a regressor constant within person is dropped") {
  const auto ds = fe_panel({});
  Column c("female", ColumnKind::Real);
  for (std::size_t r = 0; r < ds.rows(); ++r) c.push_number(ds.person_ids()[r] % 2);
  auto spec = bare_spec();
  spec.controls.numeric.push_back("female");
  const auto fe = fit_twoway_fe(ds.with_column(c), spec);
  CHECK(fe.fit.dropped_columns == std::vector<std::string>{"female"});
  CHECK_FALSE(fe.fit.index_of("female").has_value());
}

TEST_CASE("fit statistics are in range") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PanelSpec s;
    s.seed = seed;
    const auto fe = fit_twoway_fe(fe_panel(s), bare_spec(HardshipMode::None));
    CHECK(fe.fit.r_squared_within >= 0.0);
    CHECK(fe.fit.r_squared_within <= 1.0);
    CHECK(fe.fit.clustered);
    CHECK(fe.fit.n_clusters == 30);
    CHECK(fe.fit.reference_df == 29);
  }
}

TEST_CASE("standardized effects") {
  CHECK(standardize_effect(-1.79, 10.0) == doctest::Approx(-0.179));
  CHECK(standardize_effect(-3.22, 10.0) == doctest::Approx(-0.322));
  CHECK(standardize_effect(0.0, 10.0) == 0.0);
  CHECK_THROWS_AS(standardize_effect(1.0, 0.0), InputError);
  CHECK_THROWS_AS(standardize_effect(1.0, -2.0), InputError);
}

TEST_CASE("noise-free panel is recovered exactly") {
  PanelSpec s;
  s.noise = 0.0;
  const auto fe = fit_twoway_fe(fe_panel(s), bare_spec());
  CHECK(std::abs(fe.fit.coefficient(std::string(cols::kHousingStress)) + 1.8) < 1e-9);
  CHECK(std::abs(fe.fit.coefficient(std::string(cols::kHardship)) + 1.4) < 1e-9);
}

TEST_CASE("relabelling persons does not change the fit") {
  const auto ds = fe_panel({});
  std::vector<PersonId> relabelled;
  for (auto p : ds.person_ids()) relabelled.push_back(1000 - 7 * p);
  std::vector<Column> cols_copy;
  for (const auto& c : ds.schema()) cols_copy.push_back(ds.column(c.name));
  const auto other = PanelDataset::from_columns(relabelled, ds.years(), cols_copy);
  const auto a = fit_twoway_fe(ds, bare_spec());
  const auto b = fit_twoway_fe(other, bare_spec());
  CHECK((a.fit.beta - b.fit.beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.fit.se - b.fit.se).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("listwise deletion and singletons are accounted") {
  const auto ds = fe_panel({});
  Column y(std::string(cols::kMcs), ColumnKind::Real);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    // Person 1 keeps only its first year; person 2 loses one year.
    const auto p = ds.person_ids()[r];
    const int yr = ds.years()[r];
    if ((p == 1 && yr > 2001) || (p == 2 && yr == 2003)) y.push_missing();
    else y.push_number(*ds.column(cols::kMcs).number(r));
  }
  const auto fe = fit_twoway_fe(replace_column(ds, y), bare_spec());
  CHECK(fe.rows_missing == 5);
  CHECK(fe.singletons_dropped == 1);
  CHECK(fe.rows_used == 150 - 5 - 1);
  CHECK(fe.individuals == 29);
  CHECK(fe.missing_by_column.at(std::string(cols::kMcs)) == 5);

  Column none(std::string(cols::kMcs), ColumnKind::Real);
  for (std::size_t r = 0; r < ds.rows(); ++r) none.push_missing();
  CHECK_THROWS_AS(fit_twoway_fe(replace_column(ds, none), bare_spec()), EstimationError);
}

TEST_CASE("joint hardship test covers the retained block") {
  const auto fe = fit_twoway_fe(fe_panel({}), bare_spec());
  CHECK(fe.hardship_joint.q == 2);
  CHECK(fe.hardship_joint.F > 0.0);
  CHECK(fe.hardship_joint.p >= 0.0);
  CHECK(fe.hardship_joint.p <= 1.0);
}
