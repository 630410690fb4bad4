#pragma once

// Two-way fixed effects: individual means absorbed by demeaning, calendar-year
// dummies, clustering on the individual.

#include <map>
#include <string>
#include <vector>

#include "hsdid/design.hpp"
#include "hsdid/ols.hpp"
#include "hsdid/panel.hpp"

namespace hsdid {

/// Which hardship regressors enter beside housing stress.
enum class HardshipMode {
  None,      // housing stress only
  Pooled,    // housing stress + pooled hardship indicator
  Separate,  // housing stress + the seven non-housing indicators
};

std::string_view to_string(HardshipMode m);

struct FeSpec {
  std::string outcome = std::string(cols::kMcs);
  HardshipMode hardship = HardshipMode::Pooled;
  ControlSpec controls = ControlSpec::standard();
  bool year_dummies = true;

  /// Regressor labels of the hardship block (housing stress first).
  std::vector<std::string> hardship_regressors() const;
};

struct WithinStats {
  std::size_t entities = 0;
  std::size_t singleton_entities = 0;
};

/// Subtracts each entity's mean from every column of X and from y.
template <typename Scalar>
DesignMatrix<Scalar> within_transform(const DesignMatrix<Scalar>& dm,
                                      const std::vector<std::int64_t>& entity_ids,
                                      WithinStats* stats = nullptr) {
  Eigen::Index G = 0;
  const auto idx = detail::cluster_index(entity_ids, G);
  const Eigen::Index n = dm.rows();
  MatrixX<Scalar> sums = MatrixX<Scalar>::Zero(G, dm.cols());
  VectorX<Scalar> ysum = VectorX<Scalar>::Zero(G);
  VectorX<Scalar> counts = VectorX<Scalar>::Zero(G);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto g = idx[static_cast<std::size_t>(i)];
    sums.row(g) += dm.X.row(i);
    ysum[g] += dm.y[i];
    counts[g] += Scalar(1);
  }
  DesignMatrix<Scalar> out = dm;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto g = idx[static_cast<std::size_t>(i)];
    out.X.row(i) -= sums.row(g) / counts[g];
    out.y[i] -= ysum[g] / counts[g];
  }
  if (stats) {
    stats->entities = static_cast<std::size_t>(G);
    stats->singleton_entities = static_cast<std::size_t>((counts.array() == Scalar(1)).count());
  }
  return out;
}

struct FeResult {
  FeSpec spec;
  FitResultd fit;
  /// Joint test that every retained hardship regressor is zero.
  WaldTest hardship_joint;
  std::size_t rows_input = 0;
  std::size_t rows_used = 0;
  std::size_t rows_missing = 0;
  std::size_t singletons_dropped = 0;
  std::size_t individuals = 0;
  std::map<std::string, std::size_t> missing_by_column;
};

/// Listwise deletion on every spec column, singleton removal, demeaning by
/// person and a clustered fit. df_residual is debited for the absorbed means.
FeResult fit_twoway_fe(const PanelDataset& ds, const FeSpec& spec);

/// Builds the pooled design with explicit person dummies (no demeaning); used
/// by the dummy-variable equivalence check.
DesignMatrixd build_fe_design(const PanelDataset& ds, const FeSpec& spec, bool person_dummies,
                              FeResult* accounting = nullptr);

double standardize_effect(double coefficient, double population_sd);

struct BaselineColumn {
  Tenure tenure;
  HardshipMode mode;
  FeResult result;
};

/// Renters and owners, each under the three hardship modes.
std::vector<BaselineColumn> baseline_regressions(const PanelDataset& derived, const FeSpec& base);
std::string format_baseline_table(const std::vector<BaselineColumn>& columns);

}  // namespace hsdid
