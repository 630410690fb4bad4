#include "hsdid/derive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hsdid/error.hpp"

namespace hsdid {

const Schema& standard_schema() {
  static const Schema schema = [] {
    Schema s{{std::string(cols::kTenure), ColumnKind::Categorical}};
    for (auto c : {cols::kMissedHousing, cols::kBills, cols::kPawned, cols::kMeals, cols::kHeating,
                   cols::kFriends, cols::kWelfare}) {
      s.push_back({std::string(c), ColumnKind::Boolean});
    }
    s.push_back({std::string(cols::kRaiseMoney), ColumnKind::Categorical});
    for (auto c : {cols::kCannotRaise, cols::kHardship, cols::kHousingStress,
                   cols::kNonHousingHardship}) {
      s.push_back({std::string(c), ColumnKind::Boolean});
    }
    for (auto c : cols::kSf36Scales) s.push_back({std::string(c), ColumnKind::Real});
    for (auto c : {cols::kMcs, cols::kPcs, cols::kPcsLag, cols::kMentalHealthScale, cols::kIncome,
                   cols::kEqIncome, cols::kLogEqIncome}) {
      s.push_back({std::string(c), ColumnKind::Real});
    }
    s.push_back({std::string(cols::kAdults), ColumnKind::Integer});
    s.push_back({std::string(cols::kChildren), ColumnKind::Integer});
    s.push_back({std::string(cols::kEmployment), ColumnKind::Categorical});
    s.push_back({std::string(cols::kNeighbourhood), ColumnKind::Categorical});
    return s;
  }();
  return schema;
}

Schema schema_for_header(std::span<const std::string> header) {
  Schema out;
  for (const auto& spec : standard_schema()) {
    if (std::find(header.begin(), header.end(), spec.name) != header.end()) out.push_back(spec);
  }
  if (std::none_of(out.begin(), out.end(),
                   [](const ColumnSpec& s) { return s.name == cols::kTenure; })) {
    throw InputError("missing required column 'tenure'");
  }
  return out;
}

Tenure parse_tenure(std::string_view s) {
  if (s == "renter") return Tenure::Renter;
  if (s == "owner") return Tenure::Owner;
  throw InputError("unknown tenure '" + std::string(s) + "' (expected renter|owner)");
}

std::string_view to_string(Tenure t) { return t == Tenure::Renter ? "renter" : "owner"; }

RaiseMoney parse_raise_money(std::string_view code) {
  if (code == "easy" || code == "1") return RaiseMoney::Easily;
  if (code == "sacrifice" || code == "2") return RaiseMoney::WithSacrifices;
  if (code == "drastic" || code == "3") return RaiseMoney::Drastic;
  if (code == "cannot" || code == "4") return RaiseMoney::CannotRaise;
  throw InputError("unknown emergency-money response '" + std::string(code) + "'");
}

std::string_view to_string(RaiseMoney r) {
  switch (r) {
    case RaiseMoney::Easily: return "easy";
    case RaiseMoney::WithSacrifices: return "sacrifice";
    case RaiseMoney::Drastic: return "drastic";
    case RaiseMoney::CannotRaise: return "cannot";
  }
  return "unknown";
}

bool HardshipProfile::nonhousing_hardship() const {
  return could_not_pay_bills || sold_pawned || went_without_meals || went_without_heating ||
         help_friends_family || help_welfare_org || cannot_raise_emergency;
}

HardshipProfile classify_hardship(const MoneyShortageEvents& e, RaiseMoney response) {
  HardshipProfile h;
  h.missed_housing_payment = e.missed_housing_payment;
  h.could_not_pay_bills = e.could_not_pay_bills;
  h.sold_pawned = e.sold_pawned;
  h.went_without_meals = e.went_without_meals;
  h.went_without_heating = e.went_without_heating;
  h.help_friends_family = e.help_friends_family;
  h.help_welfare_org = e.help_welfare_org;
  h.cannot_raise_emergency = response == RaiseMoney::CannotRaise;
  h.housing_stress = h.missed_housing_payment;
  h.hardship = h.housing_stress || h.nonhousing_hardship();
  return h;
}

// ---------------------------------------------------------------- SF-36

PopulationNorms PopulationNorms::australian_1995() {
  return from_rows({
      {"physical_function", 83.46, 23.23, 0.47, -0.24},
      {"role_physical", 80.28, 34.84, 0.38, -0.13},
      {"bodily_pain", 76.94, 24.84, 0.37, -0.12},
      {"general_health", 71.82, 20.35, 0.19, 0.05},
      {"vitality", 64.48, 19.77, -0.02, 0.27},
      {"social_function", 85.06, 22.29, -0.01, 0.26},
      {"role_emotional", 83.19, 32.15, -0.15, 0.36},
      {"mental_health", 75.98, 16.96, -0.27, 0.49},
  });
}

PopulationNorms PopulationNorms::from_rows(std::vector<ScaleNorm> rows) {
  if (rows.size() != 8) throw InputError("norms must list exactly eight SF-36 scales");
  PopulationNorms n;
  std::array<bool, 8> seen{};
  for (auto& row : rows) {
    auto it = std::find(kScaleNames.begin(), kScaleNames.end(), row.scale);
    if (it == kScaleNames.end()) throw InputError("unknown SF-36 scale '" + row.scale + "'");
    auto i = static_cast<std::size_t>(it - kScaleNames.begin());
    if (seen[i]) throw InputError("duplicate SF-36 scale '" + row.scale + "'");
    if (!(row.sd > 0.0)) throw InputError("scale '" + row.scale + "': sd must be positive");
    seen[i] = true;
    n.scales_[i] = std::move(row);
  }
  return n;
}

PopulationNorms PopulationNorms::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open norms file '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("scale,mean,sd,pcs_weight,mcs_weight", 0) != 0) {
    throw InputError("norms file header must be scale,mean,sd,pcs_weight,mcs_weight");
  }
  std::vector<ScaleNorm> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    ScaleNorm row;
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 5) throw InputError("norms file: malformed row '" + line + "'");
    try {
      row.scale = f[0];
      row.mean = std::stod(f[1]);
      row.sd = std::stod(f[2]);
      row.pcs_weight = std::stod(f[3]);
      row.mcs_weight = std::stod(f[4]);
    } catch (const std::exception&) {
      throw InputError("norms file: unparseable row '" + line + "'");
    }
    rows.push_back(std::move(row));
  }
  return from_rows(std::move(rows));
}

std::string PopulationNorms::to_csv() const {
  std::ostringstream out;
  out << "scale,mean,sd,pcs_weight,mcs_weight\n";
  for (const auto& s : scales_) {
    out << s.scale << ',' << s.mean << ',' << s.sd << ',' << s.pcs_weight << ',' << s.mcs_weight
        << '\n';
  }
  return out.str();
}

ComponentSummaries compute_component_summaries(std::span<const double, 8> scores,
                                               std::span<const ScaleNorm, 8> norms) {
  double pcs_raw = 0.0, mcs_raw = 0.0;
  for (std::size_t j = 0; j < 8; ++j) {
    if (!std::isfinite(scores[j])) throw InputError("SF-36 scale score missing");
    const double z = (scores[j] - norms[j].mean) / norms[j].sd;
    pcs_raw += norms[j].pcs_weight * z;
    mcs_raw += norms[j].mcs_weight * z;
  }
  return {50.0 + 10.0 * pcs_raw, 50.0 + 10.0 * mcs_raw};
}

ComponentSummaries compute_component_summaries(std::span<const double, 8> scores,
                                               const PopulationNorms& norms) {
  return compute_component_summaries(scores, norms.scales());
}

// ---------------------------------------------------------------- income

OecdScale parse_oecd_scale(std::string_view s) {
  if (s == "modified") return OecdScale::Modified;
  if (s == "original" || s == "old") return OecdScale::Original;
  throw InputError("unknown OECD scale '" + std::string(s) + "' (expected modified|original)");
}

std::string_view to_string(OecdScale s) {
  return s == OecdScale::Modified ? "modified" : "original";
}

double equivalise_income(double income, int n_adults, int n_children, OecdScale scale) {
  if (n_adults < 1) throw InputError("equivalised income needs at least one adult");
  if (n_children < 0) throw InputError("negative child count");
  const double adult_w = scale == OecdScale::Modified ? 0.5 : 0.7;
  const double child_w = scale == OecdScale::Modified ? 0.3 : 0.5;
  return income / (1.0 + adult_w * (n_adults - 1) + child_w * n_children);
}

double log_income(double equivalised_income, double floor) {
  if (!(floor > 0.0)) throw InputError("income floor must be positive");
  return std::log(std::max(equivalised_income, floor));
}

Eigen::VectorXd categorical_dummies(std::string_view value, std::string_view baseline,
                                    std::span<const std::string> levels) {
  auto has = [&](std::string_view v) {
    return std::find(levels.begin(), levels.end(), v) != levels.end();
  };
  if (!has(baseline)) throw InputError("baseline '" + std::string(baseline) + "' not among levels");
  if (!has(value)) throw InputError("category '" + std::string(value) + "' not among levels");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(levels.size()) - 1);
  Eigen::Index k = 0;
  for (const auto& level : levels) {
    if (level == baseline) continue;
    if (level == value) out[k] = 1.0;
    ++k;
  }
  return out;
}

// ---------------------------------------------------------------- dataset pass

namespace {

bool has_all(const PanelDataset& ds, std::initializer_list<std::string_view> names) {
  return std::all_of(names.begin(), names.end(), [&](auto n) { return ds.has_column(n); });
}

}  // namespace

std::size_t count_nesting_violations(const PanelDataset& ds) {
  if (!ds.has_column(cols::kHousingStress) || !ds.has_column(cols::kHardship)) return 0;
  const auto& hs = ds.column(cols::kHousingStress);
  const auto& h = ds.column(cols::kHardship);
  std::size_t bad = 0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    auto s = hs.boolean(r);
    auto f = h.boolean(r);
    if (s && *s && !(f && *f)) ++bad;
  }
  return bad;
}

DeriveResult derive_variables(const PanelDataset& input, const DeriveConfig& cfg) {
  DeriveReport report;
  report.rows = input.rows();
  PanelDataset ds = input;
  const std::size_t n = ds.rows();

  if (has_all(ds, {cols::kMissedHousing, cols::kBills, cols::kPawned, cols::kMeals, cols::kHeating,
                   cols::kFriends, cols::kWelfare, cols::kRaiseMoney})) {
    std::array<const Column*, 7> ev{
        &ds.column(cols::kMissedHousing), &ds.column(cols::kBills),   &ds.column(cols::kPawned),
        &ds.column(cols::kMeals),         &ds.column(cols::kHeating), &ds.column(cols::kFriends),
        &ds.column(cols::kWelfare)};
    const Column& raise = ds.column(cols::kRaiseMoney);
    Column cannot(std::string(cols::kCannotRaise), ColumnKind::Boolean);
    Column hardship(std::string(cols::kHardship), ColumnKind::Boolean);
    Column stress(std::string(cols::kHousingStress), ColumnKind::Boolean);
    Column nonhousing(std::string(cols::kNonHousingHardship), ColumnKind::Boolean);
    for (std::size_t r = 0; r < n; ++r) {
      bool complete = !raise.is_missing(r);
      std::array<bool, 7> e{};
      for (std::size_t j = 0; j < 7; ++j) {
        auto b = ev[j]->boolean(r);
        if (!b) {
          complete = false;
        } else {
          e[j] = *b;
        }
      }
      if (!complete) {
        cannot.push_missing();
        hardship.push_missing();
        stress.push_missing();
        nonhousing.push_missing();
        ++report.hardship_missing_rows;
        continue;
      }
      const auto p = classify_hardship({e[0], e[1], e[2], e[3], e[4], e[5], e[6]},
                                       parse_raise_money(*raise.category(r)));
      cannot.push_bool(p.cannot_raise_emergency);
      hardship.push_bool(p.hardship);
      stress.push_bool(p.housing_stress);
      nonhousing.push_bool(p.nonhousing_hardship());
      report.hardship_rows += p.hardship;
      report.housing_stress_rows += p.housing_stress;
    }
    ds = ds.with_column(std::move(cannot))
             .with_column(std::move(hardship))
             .with_column(std::move(stress))
             .with_column(std::move(nonhousing));
  }

  bool scales_present = std::all_of(cols::kSf36Scales.begin(), cols::kSf36Scales.end(),
                                    [&](auto c) { return ds.has_column(c); });
  if (scales_present) {
    std::array<const Column*, 8> sc{};
    for (std::size_t j = 0; j < 8; ++j) sc[j] = &ds.column(cols::kSf36Scales[j]);
    Column pcs(std::string(cols::kPcs), ColumnKind::Real);
    Column mcs(std::string(cols::kMcs), ColumnKind::Real);
    for (std::size_t r = 0; r < n; ++r) {
      std::array<double, 8> s{};
      bool complete = true;
      for (std::size_t j = 0; j < 8; ++j) {
        auto v = sc[j]->number(r);
        if (!v) {
          complete = false;
          break;
        }
        if (*v < 0.0 || *v > 100.0) {
          throw InputError("SF-36 scale '" + sc[j]->name() + "' outside [0, 100] at (" +
                           std::to_string(ds.person_ids()[r]) + ", " + std::to_string(ds.years()[r]) + ")");
        }
        s[j] = *v;
      }
      if (!complete) {
        pcs.push_missing();
        mcs.push_missing();
        continue;
      }
      auto cs = compute_component_summaries(s, cfg.norms);
      pcs.push_number(cs.pcs);
      mcs.push_number(cs.mcs);
      ++report.component_summaries_computed;
    }
    ds = ds.with_column(std::move(pcs)).with_column(std::move(mcs));
    if (!ds.has_column(cols::kMentalHealthScale)) {
      ds = ds.with_column(ds.column(cols::kSf36Scales[7]).renamed(std::string(cols::kMentalHealthScale)));
    }
  }

  if (has_all(ds, {cols::kIncome, cols::kAdults, cols::kChildren})) {
    const Column& inc = ds.column(cols::kIncome);
    const Column& adults = ds.column(cols::kAdults);
    const Column& children = ds.column(cols::kChildren);
    Column eq(std::string(cols::kEqIncome), ColumnKind::Real);
    Column lg(std::string(cols::kLogEqIncome), ColumnKind::Real);
    for (std::size_t r = 0; r < n; ++r) {
      auto i = inc.number(r);
      auto a = adults.number(r);
      auto c = children.number(r);
      if (!i || !a || !c || *a < 1) {
        eq.push_missing();
        lg.push_missing();
        continue;
      }
      if (*i < 0) ++report.negative_income_rows;
      double e = equivalise_income(*i, static_cast<int>(*a), static_cast<int>(*c), cfg.oecd_scale);
      eq.push_number(e);
      lg.push_number(log_income(e, cfg.income_floor));
    }
    ds = ds.with_column(std::move(eq)).with_column(std::move(lg));
  }

  if (ds.has_column(cols::kPcs)) ds = lag(ds, cols::kPcs, 1);

  report.nesting_violations = count_nesting_violations(ds);
  if (report.nesting_violations != 0) {
    throw InvariantError(std::to_string(report.nesting_violations) +
                         " rows with housing stress but no hardship");
  }
  return {std::move(ds), report};
}

}  // namespace hsdid
