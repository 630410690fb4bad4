#pragma once

// Assembly of regressor columns (numeric controls and baseline-coded dummies)
// from panel rows.

#include <span>
#include <string>
#include <vector>

#include "hsdid/derive.hpp"
#include "hsdid/ols.hpp"
#include "hsdid/panel.hpp"

namespace hsdid {

struct CategoricalControl {
  std::string column;
  std::string baseline;
  std::vector<std::string> levels;  // includes the baseline
};

struct ControlSpec {
  std::vector<std::string> numeric;
  std::vector<CategoricalControl> categorical;

  /// Log equivalised income, lagged PCS, employment (baseline "other") and
  /// neighbourhood quintile (baseline "1").
  static ControlSpec standard();
  static ControlSpec none() { return {}; }

  /// Source columns the controls read.
  std::vector<std::string> source_columns() const;
  /// Design labels: numeric names, then "column=level" per non-baseline level.
  std::vector<std::string> labels() const;
  std::size_t width() const { return labels().size(); }
};

/// Writes the control values of `row` into `out` (length `spec.width()`).
/// Throws InputError for a category outside the declared levels.
void fill_controls(const PanelDataset& ds, std::size_t row, const ControlSpec& spec,
                   std::span<double> out);

/// True when every listed column is present at `row`.
bool row_complete(const PanelDataset& ds, std::size_t row, std::span<const std::string> columns);

/// Sorted distinct values, e.g. for year-dummy levels.
std::vector<int> distinct_sorted(std::span<const int> values);

std::string dummy_label(std::string_view column, std::string_view level);

}  // namespace hsdid
