#include "hsdid/match.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "hsdid/design.hpp"
#include "hsdid/error.hpp"

namespace hsdid {

std::string_view to_string(Group g) { return g == Group::Treat ? "treat" : "control"; }

std::string_view to_string(Subgroup s) {
  switch (s) {
    case Subgroup::Low: return "low";
    case Subgroup::Moderate: return "moderate";
    case Subgroup::High: return "high";
  }
  return "unknown";
}

Subgroup parse_subgroup(std::string_view s) {
  if (s == "low") return Subgroup::Low;
  if (s == "moderate") return Subgroup::Moderate;
  if (s == "high") return Subgroup::High;
  throw InputError("unknown subgroup '" + std::string(s) + "' (expected low|moderate|high)");
}

std::optional<Subgroup> subgroup_of(const HardshipHistory& history) {
  const auto [a, b, c] = history.h;
  if (!c) return std::nullopt;
  if (!a && !b) return Subgroup::Low;
  if (!a && b) return Subgroup::Moderate;
  if (a && b) return Subgroup::High;
  return std::nullopt;
}

std::vector<std::string> default_analysis_columns(std::string_view outcome) {
  std::vector<std::string> out{std::string(outcome)};
  for (auto& c : ControlSpec::standard().source_columns()) out.push_back(c);
  return out;
}

std::vector<Candidate> find_candidates(const PanelDataset& ds, Tenure tenure,
                                       std::span<const std::string> analysis_columns,
                                       CandidateReport* report) {
  std::vector<std::string> required(analysis_columns.begin(), analysis_columns.end());
  for (auto c : {cols::kTenure, cols::kHousingStress, cols::kNonHousingHardship}) {
    required.emplace_back(c);
  }
  const auto windows = consecutive_windows(ds, required);
  const Column& ten = ds.column(cols::kTenure);
  const Column& hs = ds.column(cols::kHousingStress);
  const Column& nh = ds.column(cols::kNonHousingHardship);
  const auto label = to_string(tenure);

  CandidateReport rep;
  std::vector<Candidate> out;
  for (const auto& w : windows) {
    ++rep.windows;
    int holding = 0;
    for (auto r : w.rows) holding += (*ten.category(r) == label);
    if (holding != 3) {
      if (holding > 0) ++rep.tenure_excluded;
      continue;
    }
    if (*hs.boolean(w.rows[0]) || *hs.boolean(w.rows[1])) {
      ++rep.housing_stress_before_event;
      continue;
    }
    HardshipHistory hist{{*nh.boolean(w.rows[0]), *nh.boolean(w.rows[1]), *nh.boolean(w.rows[2])}};
    if (!hist.h[2]) {
      ++rep.no_event;
      continue;
    }
    auto sub = subgroup_of(hist);
    if (!sub) {
      ++rep.recovery_history;
      continue;
    }
    Candidate c;
    c.window = w;
    c.group = *hs.boolean(w.rows[2]) ? Group::Treat : Group::Control;
    c.subgroup = *sub;
    c.tenure = tenure;
    c.history = hist;
    out.push_back(c);
  }
  rep.candidates = out.size();
  if (report) *report = rep;
  return out;
}

std::size_t MatchedSubsample::persons(Group g) const {
  return static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [g](const Candidate& c) { return c.group == g; }));
}

MatchedSubsample dedup(std::span<const Candidate> candidates, const PanelDataset& data) {
  MatchedSubsample ms;
  ms.data = data;
  if (candidates.empty()) return ms;
  ms.tenure = candidates.front().tenure;
  ms.subgroup = candidates.front().subgroup;
  std::map<PersonId, const Candidate*> best;
  for (const auto& c : candidates) {
    if (c.tenure != ms.tenure || c.subgroup != ms.subgroup) {
      throw InputError("dedup: candidates must share tenure and subgroup");
    }
    auto [it, inserted] = best.emplace(c.window.person_id, &c);
    if (inserted) continue;
    const Candidate* cur = it->second;
    const bool better = (c.group == Group::Treat && cur->group == Group::Control) ||
                        (c.group == cur->group && c.window.event_year() < cur->window.event_year());
    if (better) it->second = &c;
  }
  for (const auto& [p, c] : best) ms.candidates.push_back(*c);
  return ms;
}

std::array<MatchedSubsample, 3> build_subsamples(const PanelDataset& ds, Tenure tenure,
                                                 std::span<const std::string> analysis_columns,
                                                 CandidateReport* report) {
  const auto all = find_candidates(ds, tenure, analysis_columns, report);
  std::array<MatchedSubsample, 3> out;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<Candidate> part;
    for (const auto& c : all) {
      if (c.subgroup == kSubgroups[s]) part.push_back(c);
    }
    out[s] = dedup(part, ds);
    out[s].tenure = tenure;
    out[s].subgroup = kSubgroups[s];
  }
  return out;
}

namespace {

struct SummaryVariable {
  std::string name;
  std::function<std::optional<double>(const PanelDataset&, std::size_t)> value;
};

std::vector<SummaryVariable> summary_variables(std::string_view outcome) {
  auto numeric = [](std::string col, double scale) {
    return [col, scale](const PanelDataset& ds, std::size_t r) -> std::optional<double> {
      if (!ds.has_column(col)) return std::nullopt;
      auto v = ds.column(col).number(r);
      if (!v) return std::nullopt;
      return *v * scale;
    };
  };
  auto level = [](std::string col, std::string lvl) {
    return [col, lvl](const PanelDataset& ds, std::size_t r) -> std::optional<double> {
      if (!ds.has_column(col)) return std::nullopt;
      auto v = ds.column(col).category(r);
      if (!v) return std::nullopt;
      return *v == lvl ? 1.0 : 0.0;
    };
  };
  auto quintile = [](const PanelDataset& ds, std::size_t r) -> std::optional<double> {
    if (!ds.has_column(cols::kNeighbourhood)) return std::nullopt;
    auto v = ds.column(cols::kNeighbourhood).category(r);
    if (!v) return std::nullopt;
    try {
      return std::stod(std::string(*v));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  return {
      {std::string(outcome), numeric(std::string(outcome), 1.0)},
      {"employed_full_time", level(std::string(cols::kEmployment), "full_time")},
      {"employed_part_time", level(std::string(cols::kEmployment), "part_time")},
      {"neighbourhood_quintile", quintile},
      {"eq_income_thousands", numeric(std::string(cols::kEqIncome), 1e-3)},
      {std::string(cols::kPcs), numeric(std::string(cols::kPcs), 1.0)},
  };
}

int event_index(int event_time) {
  if (event_time < -2 || event_time > 0) throw InputError("event time must be -2, -1 or 0");
  return event_time + 2;
}

std::string fmt2(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::vector<SummaryRow> subsample_summary(const MatchedSubsample& ms, int event_time,
                                          std::string_view outcome) {
  const int e = event_index(event_time);
  std::vector<SummaryRow> out;
  for (const auto& var : summary_variables(outcome)) {
    for (Group g : {Group::Control, Group::Treat}) {
      std::vector<double> xs;
      for (const auto& c : ms.candidates) {
        if (c.group != g) continue;
        if (auto v = var.value(ms.data, c.window.rows[static_cast<std::size_t>(e)])) xs.push_back(*v);
      }
      SummaryRow row{var.name, g, xs.size(), std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::quiet_NaN()};
      if (!xs.empty()) {
        double sum = 0.0;
        for (double x : xs) sum += x;
        row.mean = sum / static_cast<double>(xs.size());
        if (xs.size() >= 2) {
          double ss = 0.0;
          for (double x : xs) ss += (x - row.mean) * (x - row.mean);
          row.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        }
      }
      out.push_back(row);
    }
  }
  return out;
}

std::string format_summary_table(std::span<const MatchedSubsample> subsamples, int event_time,
                                 std::string_view outcome) {
  std::ostringstream out;
  if (subsamples.empty()) return "";
  out << "Summary statistics - " << to_string(subsamples.front().subgroup)
      << " matched subgroups (t = " << event_time << ")\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-26s", "variable");
  out << buf;
  for (const auto& ms : subsamples) {
    for (Group g : {Group::Control, Group::Treat}) {
      std::string head = std::string(to_string(ms.tenure)) + ":" + std::string(to_string(g));
      std::snprintf(buf, sizeof buf, " | %-22s", head.c_str());
      out << buf;
    }
  }
  out << "\n";
  std::snprintf(buf, sizeof buf, "%-26s", "");
  out << buf;
  for (std::size_t i = 0; i < subsamples.size() * 2; ++i) {
    std::snprintf(buf, sizeof buf, " | %6s %7s %7s", "N", "Mean", "SD");
    out << buf;
  }
  out << "\n";
  std::vector<std::vector<SummaryRow>> tables;
  for (const auto& ms : subsamples) tables.push_back(subsample_summary(ms, event_time, outcome));
  const std::size_t nvars = tables.front().size() / 2;
  for (std::size_t v = 0; v < nvars; ++v) {
    std::snprintf(buf, sizeof buf, "%-26s", tables.front()[2 * v].variable.c_str());
    out << buf;
    for (const auto& t : tables) {
      for (std::size_t g = 0; g < 2; ++g) {
        const auto& row = t[2 * v + g];
        std::snprintf(buf, sizeof buf, " | %6zu %7s %7s", row.n, fmt2(row.mean).c_str(), fmt2(row.sd).c_str());
        out << buf;
      }
    }
    out << "\n";
  }
  return out.str();
}

std::string subsample_csv(const MatchedSubsample& ms, std::span<const std::string> analysis_columns) {
  std::ostringstream out;
  out << "person_id,event_year,event_time,group,subgroup";
  for (const auto& c : analysis_columns) out << ',' << c;
  out << '\n';
  std::vector<const Column*> cols;
  for (const auto& c : analysis_columns) cols.push_back(&ms.data.column(c));
  for (const auto& c : ms.candidates) {
    for (std::size_t e = 0; e < 3; ++e) {
      const auto r = c.window.rows[e];
      out << c.window.person_id << ',' << c.window.event_year() << ',' << Window::event_times[e] << ','
          << to_string(c.group) << ',' << to_string(c.subgroup);
      for (const Column* col : cols) {
        out << ',';
        if (col->is_missing(r)) {
          out << "NA";
        } else if (col->kind() == ColumnKind::Categorical) {
          out << *col->category(r);
        } else {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.17g", *col->number(r));
          out << buf;
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string event_year_frequency_csv(std::span<const MatchedSubsample> subsamples) {
  std::ostringstream out;
  out << "tenure,subgroup,group,event_year,count\n";
  for (const auto& ms : subsamples) {
    for (Group g : {Group::Control, Group::Treat}) {
      std::map<int, std::size_t> freq;
      for (const auto& c : ms.candidates) {
        if (c.group == g) ++freq[c.window.event_year()];
      }
      for (const auto& [year, count] : freq) {
        out << to_string(ms.tenure) << ',' << to_string(ms.subgroup) << ',' << to_string(g) << ','
            << year << ',' << count << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace hsdid
