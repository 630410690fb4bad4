#include "hsdid/design.hpp"

#include <algorithm>

#include "hsdid/error.hpp"

namespace hsdid {

ControlSpec ControlSpec::standard() {
  ControlSpec s;
  s.numeric = {std::string(cols::kLogEqIncome), std::string(cols::kPcsLag)};
  s.categorical.push_back({std::string(cols::kEmployment), "other", {"full_time", "part_time", "other"}});
  s.categorical.push_back({std::string(cols::kNeighbourhood), "1", {"1", "2", "3", "4", "5"}});
  return s;
}

std::vector<std::string> ControlSpec::source_columns() const {
  std::vector<std::string> out = numeric;
  for (const auto& c : categorical) out.push_back(c.column);
  return out;
}

std::string dummy_label(std::string_view column, std::string_view level) {
  return std::string(column) + "=" + std::string(level);
}

std::vector<std::string> ControlSpec::labels() const {
  std::vector<std::string> out = numeric;
  for (const auto& c : categorical) {
    for (const auto& level : c.levels) {
      if (level != c.baseline) out.push_back(dummy_label(c.column, level));
    }
  }
  return out;
}

void fill_controls(const PanelDataset& ds, std::size_t row, const ControlSpec& spec,
                   std::span<double> out) {
  std::size_t k = 0;
  for (const auto& name : spec.numeric) {
    auto v = ds.column(name).number(row);
    if (!v) throw InputError("control '" + name + "' missing at row " + std::to_string(row));
    out[k++] = *v;
  }
  for (const auto& c : spec.categorical) {
    auto v = ds.column(c.column).category(row);
    if (!v) throw InputError("control '" + c.column + "' missing at row " + std::to_string(row));
    const auto d = categorical_dummies(*v, c.baseline, c.levels);
    for (Eigen::Index j = 0; j < d.size(); ++j) out[k++] = d[j];
  }
}

bool row_complete(const PanelDataset& ds, std::size_t row, std::span<const std::string> columns) {
  return std::all_of(columns.begin(), columns.end(),
                     [&](const std::string& c) { return !ds.column(c).is_missing(row); });
}

std::vector<int> distinct_sorted(std::span<const int> values) {
  std::vector<int> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace hsdid
