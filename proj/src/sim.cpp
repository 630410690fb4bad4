#include "hsdid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "hsdid/did.hpp"
#include "hsdid/error.hpp"
#include "hsdid/fe.hpp"

namespace hsdid {

std::string_view to_string(DgpMode m) { return m == DgpMode::Free ? "free" : "matched"; }

DgpMode parse_dgp_mode(std::string_view s) {
  if (s == "free") return DgpMode::Free;
  if (s == "matched") return DgpMode::Matched;
  throw InputError("unknown simulator mode '" + std::string(s) + "' (expected free|matched)");
}

std::string_view to_string(McPipeline p) { return p == McPipeline::Fe ? "fe" : "did"; }

McPipeline parse_mc_pipeline(std::string_view s) {
  if (s == "fe") return McPipeline::Fe;
  if (s == "did") return McPipeline::Did;
  throw InputError("unknown Monte Carlo pipeline '" + std::string(s) + "' (expected fe|did)");
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

// ---------------------------------------------------------------------------
// Config file

namespace {

struct Field {
  std::function<void(DgpConfig&, const std::string&)> set;
  std::function<std::string(const DgpConfig&)> get;
};

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw InputError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw InputError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw InputError("config: '" + key + "' out of range");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::map<std::string, Field>& fields() {
  using C = DgpConfig;
  auto dbl = [](double C::*m, const char* key) {
    return Field{[m, key](C& c, const std::string& v) { c.*m = parse_double(key, v); },
                 [m](const C& c) { return fmt(c.*m); }};
  };
  auto count = [](std::size_t C::*m, const char* key) {
    return Field{[m, key](C& c, const std::string& v) { c.*m = static_cast<std::size_t>(parse_u64(key, v)); },
                 [m](const C& c) { return std::to_string(c.*m); }};
  };
  static const std::map<std::string, Field> f = {
      {"mode", {[](C& c, const std::string& v) { c.mode = parse_dgp_mode(v); },
                [](const C& c) { return std::string(to_string(c.mode)); }}},
      {"seed", {[](C& c, const std::string& v) { c.seed = parse_u64("seed", v); },
                [](const C& c) { return std::to_string(c.seed); }}},
      {"persons", count(&C::persons, "persons")},
      {"first_year", {[](C& c, const std::string& v) { c.years.first = static_cast<int>(parse_double("first_year", v)); },
                      [](const C& c) { return std::to_string(c.years.first); }}},
      {"last_year", {[](C& c, const std::string& v) { c.years.last = static_cast<int>(parse_double("last_year", v)); },
                     [](const C& c) { return std::to_string(c.years.last); }}},
      {"renter_share", dbl(&C::renter_share, "renter_share")},
      {"hardship_entry", dbl(&C::hardship_entry, "hardship_entry")},
      {"hardship_persistence", dbl(&C::hardship_persistence, "hardship_persistence")},
      {"n_treat", count(&C::n_treat, "n_treat")},
      {"n_control", count(&C::n_control, "n_control")},
      {"tenure", {[](C& c, const std::string& v) { c.tenure = parse_tenure(v); },
                  [](const C& c) { return std::string(to_string(c.tenure)); }}},
      {"subgroup", {[](C& c, const std::string& v) { c.subgroup = parse_subgroup(v); },
                    [](const C& c) { return std::string(to_string(c.subgroup)); }}},
      {"group_gap", dbl(&C::group_gap, "group_gap")},
      {"pre_trend_slope", dbl(&C::pre_trend_slope, "pre_trend_slope")},
      {"housing_stress_given_hardship", dbl(&C::housing_stress_given_hardship, "housing_stress_given_hardship")},
      {"nonhousing_given_housing_stress", dbl(&C::nonhousing_given_housing_stress, "nonhousing_given_housing_stress")},
      {"individual_sd", dbl(&C::individual_sd, "individual_sd")},
      {"year_effect_sd", dbl(&C::year_effect_sd, "year_effect_sd")},
      {"noise_sd", dbl(&C::noise_sd, "noise_sd")},
      {"tau", dbl(&C::tau, "tau")},
      {"theta", dbl(&C::theta, "theta")},
      {"beta_log_income", dbl(&C::beta_log_income, "beta_log_income")},
      {"beta_pcs_lag", dbl(&C::beta_pcs_lag, "beta_pcs_lag")},
      {"beta_full_time", dbl(&C::beta_full_time, "beta_full_time")},
      {"beta_part_time", dbl(&C::beta_part_time, "beta_part_time")},
      {"beta_neighbourhood", dbl(&C::beta_neighbourhood, "beta_neighbourhood")},
      {"reverse_causality", dbl(&C::reverse_causality, "reverse_causality")},
  };
  return f;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void DgpConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string("config: ") + name + " must lie in [0,1]");
  };
  prob(renter_share, "renter_share");
  prob(hardship_entry, "hardship_entry");
  prob(hardship_persistence, "hardship_persistence");
  prob(housing_stress_given_hardship, "housing_stress_given_hardship");
  prob(nonhousing_given_housing_stress, "nonhousing_given_housing_stress");
  for (auto [v, name] : {std::pair{individual_sd, "individual_sd"}, {year_effect_sd, "year_effect_sd"},
                         {noise_sd, "noise_sd"}}) {
    if (!(v >= 0.0)) throw InputError(std::string("config: ") + name + " must be non-negative");
  }
  if (years.first > years.last) throw InputError("config: first_year after last_year");
  if (mode == DgpMode::Free && persons < 2) throw InputError("config: at least two persons required");
  if (mode == DgpMode::Matched) {
    if (n_treat + n_control < 2) throw InputError("config: at least two persons required");
    if (years.last - years.first < 3) throw InputError("config: matched mode needs a span of four years");
  }
}

DgpConfig DgpConfig::parse(std::string_view text, DgpConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = fields().find(key);
    if (it == fields().end()) throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second.set(base, value);
  }
  return base;
}

DgpConfig DgpConfig::load(const std::string& path, DgpConfig base) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), std::move(base));
}

DgpConfig DgpConfig::parse(std::string_view text) { return parse(text, DgpConfig{}); }
DgpConfig DgpConfig::load(const std::string& path) { return load(path, DgpConfig{}); }

std::string DgpConfig::to_text() const {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(*this) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Panel generation

namespace {

using Engine = std::mt19937_64;

bool bernoulli(Engine& g, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(g) < p; }

double shifted(double p, double shift) {
  if (shift == 0.0 || p <= 0.0 || p >= 1.0) return p;
  const double z = std::log(p / (1.0 - p)) + shift;
  return 1.0 / (1.0 + std::exp(-z));
}

struct PersonTraits {
  double alpha = 0.0;
  double pcs_effect = 0.0;
  double log_income_effect = 0.0;
  int adults = 2;
  int children = 0;
  int neighbourhood = 1;
  Tenure tenure = Tenure::Renter;
};

struct Indicators {
  std::array<bool, 7> events{};  // missed housing first, then the six other events
  RaiseMoney raise = RaiseMoney::Easily;
};

// Answers consistent with the (hardship, housing stress, non-housing) state.
Indicators draw_indicators(Engine& g, bool hardship, bool housing_stress, bool nonhousing) {
  Indicators ind;
  if (!hardship) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(g);
    ind.raise = u < 0.6 ? RaiseMoney::Easily : u < 0.9 ? RaiseMoney::WithSacrifices : RaiseMoney::Drastic;
    return ind;
  }
  ind.events[0] = housing_stress;
  ind.raise = bernoulli(g, 0.5) ? RaiseMoney::WithSacrifices : RaiseMoney::Drastic;
  if (nonhousing) {
    // Slots 1..6 are the other events, slot 7 stands for "cannot raise".
    std::array<bool, 8> pick{};
    bool any = false;
    for (int k = 1; k < 8; ++k) any |= (pick[static_cast<std::size_t>(k)] = bernoulli(g, 0.3));
    if (!any) pick[static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 7)(g))] = true;
    for (int k = 1; k < 7; ++k) ind.events[static_cast<std::size_t>(k)] = pick[static_cast<std::size_t>(k)];
    if (pick[7]) ind.raise = RaiseMoney::CannotRaise;
  }
  return ind;
}

struct Builder {
  std::vector<PersonId> persons;
  std::vector<int> years;
  Column tenure{std::string(cols::kTenure), ColumnKind::Categorical};
  std::array<Column, 7> events{
      Column{std::string(cols::kMissedHousing), ColumnKind::Boolean},
      Column{std::string(cols::kBills), ColumnKind::Boolean},
      Column{std::string(cols::kPawned), ColumnKind::Boolean},
      Column{std::string(cols::kMeals), ColumnKind::Boolean},
      Column{std::string(cols::kHeating), ColumnKind::Boolean},
      Column{std::string(cols::kFriends), ColumnKind::Boolean},
      Column{std::string(cols::kWelfare), ColumnKind::Boolean}};
  Column raise{std::string(cols::kRaiseMoney), ColumnKind::Categorical};
  Column mcs{std::string(cols::kMcs), ColumnKind::Real};
  Column pcs{std::string(cols::kPcs), ColumnKind::Real};
  Column mh_scale{std::string(cols::kMentalHealthScale), ColumnKind::Real};
  Column income{std::string(cols::kIncome), ColumnKind::Real};
  Column adults{std::string(cols::kAdults), ColumnKind::Integer};
  Column children{std::string(cols::kChildren), ColumnKind::Integer};
  Column employment{std::string(cols::kEmployment), ColumnKind::Categorical};
  Column neighbourhood{std::string(cols::kNeighbourhood), ColumnKind::Categorical};
  DgpTruth truth;

  PanelDataset finish(YearRange range) {
    std::vector<Column> columns{tenure};
    for (auto& c : events) columns.push_back(c);
    for (Column* c : {&raise, &mcs, &pcs, &mh_scale, &income, &adults, &children, &employment, &neighbourhood}) {
      columns.push_back(*c);
    }
    return PanelDataset::from_columns(std::move(persons), std::move(years), std::move(columns), range);
  }
};

// Hardship state of one person-year, already resolved.
struct YearState {
  bool hardship = false;
  bool housing_stress = false;
  bool nonhousing = false;
};

class Generator {
 public:
  explicit Generator(const DgpConfig& cfg) : cfg_(cfg) {
    for (int y = cfg.years.first; y <= cfg.years.last; ++y) {
      Engine g(stream_seed(cfg.seed, 0, static_cast<std::uint64_t>(y), 2));
      lambda_[y] = std::normal_distribution<double>(0.0, 1.0)(g) * cfg.year_effect_sd;
    }
  }

  PersonTraits traits(PersonId id, Tenure tenure) const {
    Engine g(stream_seed(cfg_.seed, static_cast<std::uint64_t>(id), 0, 1));
    std::normal_distribution<double> z(0.0, 1.0);
    PersonTraits t;
    t.alpha = z(g) * cfg_.individual_sd;
    t.pcs_effect = z(g) * 6.0;
    t.log_income_effect = z(g) * 0.4;
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(g);
    t.adults = u < 0.3 ? 1 : u < 0.85 ? 2 : 3;
    t.children = std::uniform_int_distribution<int>(0, 3)(g);
    t.neighbourhood = std::uniform_int_distribution<int>(1, 5)(g);
    t.tenure = tenure;
    return t;
  }

  Tenure free_tenure(PersonId id) const {
    Engine g(stream_seed(cfg_.seed, static_cast<std::uint64_t>(id), 0, 3));
    return bernoulli(g, cfg_.renter_share) ? Tenure::Renter : Tenure::Owner;
  }

  int matched_start(PersonId id) const {
    Engine g(stream_seed(cfg_.seed, static_cast<std::uint64_t>(id), 0, 4));
    return std::uniform_int_distribution<int>(cfg_.years.first, cfg_.years.last - 3)(g);
  }

  // Emits consecutive years for one person. `state_of` resolves the hardship
  // state for each year given the previous outcome shock; `shift` is the
  // treat-specific outcome shift by year.
  void emit(Builder& b, PersonId id, const PersonTraits& t, int first, int last,
            const std::function<YearState(int year, Engine& g, std::optional<double> prev_eps,
                                          std::optional<YearState> prev)>& state_of,
            const std::function<double(int year)>& shift) const {
    std::optional<double> prev_eps;
    std::optional<double> prev_pcs;
    std::optional<YearState> prev_state;
    for (int year = first; year <= last; ++year) {
      Engine g(stream_seed(cfg_.seed, static_cast<std::uint64_t>(id), static_cast<std::uint64_t>(year), 5));
      std::normal_distribution<double> z(0.0, 1.0);
      const YearState s = state_of(year, g, prev_eps, prev_state);
      const Indicators ind = draw_indicators(g, s.hardship, s.housing_stress, s.nonhousing);

      const double eps = z(g) * cfg_.noise_sd;
      const double pcs = 50.0 + t.pcs_effect + z(g) * 6.0;
      const double income = std::exp(std::log(60000.0) + t.log_income_effect + z(g) * 0.2);
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(g);
      const char* employment = u < 0.55 ? "full_time" : u < 0.75 ? "part_time" : "other";

      const double log_eq = log_income(equivalise_income(income, t.adults, t.children));
      // The first observed year has no lagged PCS; the population mean stands in.
      const double pcs_lag = prev_pcs.value_or(50.0);
      double xb = cfg_.beta_log_income * log_eq + cfg_.beta_pcs_lag * pcs_lag +
                  cfg_.beta_neighbourhood * (t.neighbourhood - 1);
      if (employment[0] == 'f') xb += cfg_.beta_full_time;
      if (employment[0] == 'p') xb += cfg_.beta_part_time;

      const double lambda = lambda_.at(year);
      const double mh0 = t.alpha + lambda + cfg_.theta * (s.hardship ? 1.0 : 0.0) + xb + shift(year) + eps;
      const double mh1 = mh0 + cfg_.tau;
      const bool d = s.housing_stress;
      const double observed = d ? mh1 : mh0;

      b.persons.push_back(id);
      b.years.push_back(year);
      b.tenure.push_category(std::string(to_string(t.tenure)));
      for (std::size_t k = 0; k < 7; ++k) b.events[k].push_bool(ind.events[k]);
      b.raise.push_category(std::string(to_string(ind.raise)));
      b.mcs.push_number(observed);
      b.pcs.push_number(pcs);
      b.mh_scale.push_number(std::clamp(70.0 + 1.5 * (observed - 50.0), 0.0, 100.0));
      b.income.push_number(income);
      b.adults.push_number(t.adults);
      b.children.push_number(t.children);
      b.employment.push_category(employment);
      b.neighbourhood.push_category(std::to_string(t.neighbourhood));
      b.truth.mh0.push_back(mh0);
      b.truth.mh1.push_back(mh1);
      b.truth.treated.push_back(d ? 1 : 0);
      b.truth.alpha.push_back(t.alpha);
      b.truth.lambda.push_back(lambda);

      prev_eps = eps;
      prev_pcs = pcs;
      prev_state = s;
    }
  }

  double shock_shift(std::optional<double> prev_eps) const {
    if (!prev_eps || cfg_.reverse_causality == 0.0 || cfg_.noise_sd == 0.0) return 0.0;
    return -cfg_.reverse_causality * *prev_eps / cfg_.noise_sd;
  }

  const DgpConfig& cfg() const { return cfg_; }

 private:
  const DgpConfig& cfg_;
  std::map<int, double> lambda_;
};

}  // namespace

SimulatedPanel generate_panel(const DgpConfig& cfg) {
  cfg.validate();
  Generator gen(cfg);
  Builder b;

  if (cfg.mode == DgpMode::Free) {
    const double stationary =
        cfg.hardship_entry / std::max(1e-12, 1.0 + cfg.hardship_entry - cfg.hardship_persistence);
    for (std::size_t i = 0; i < cfg.persons; ++i) {
      const auto id = static_cast<PersonId>(i + 1);
      const PersonTraits t = gen.traits(id, gen.free_tenure(id));
      auto state_of = [&](int, Engine& g, std::optional<double> prev_eps, std::optional<YearState> prev) {
        const double shift = gen.shock_shift(prev_eps);
        const double base = prev ? (prev->hardship ? cfg.hardship_persistence : cfg.hardship_entry)
                                 : std::min(1.0, stationary);
        YearState s;
        s.hardship = bernoulli(g, shifted(base, shift));
        if (s.hardship) {
          s.housing_stress = bernoulli(g, shifted(cfg.housing_stress_given_hardship, shift));
          s.nonhousing = s.housing_stress ? bernoulli(g, cfg.nonhousing_given_housing_stress) : true;
        }
        return s;
      };
      gen.emit(b, id, t, cfg.years.first, cfg.years.last, state_of, [](int) { return 0.0; });
    }
  } else {
    const auto history = [&] {
      switch (cfg.subgroup) {
        case Subgroup::Low: return std::array<bool, 2>{false, false};
        case Subgroup::Moderate: return std::array<bool, 2>{false, true};
        case Subgroup::High: break;
      }
      return std::array<bool, 2>{true, true};
    }();
    for (std::size_t i = 0; i < cfg.n_treat + cfg.n_control; ++i) {
      const auto id = static_cast<PersonId>(i + 1);
      const bool treat = i < cfg.n_treat;
      const PersonTraits t = gen.traits(id, cfg.tenure);
      const int start = gen.matched_start(id);
      const int event_year = start + 3;
      auto state_of = [&](int year, Engine&, std::optional<double>, std::optional<YearState>) {
        YearState s;
        const int e = year - event_year;
        if (e == 0) {
          s.hardship = true;
          s.nonhousing = true;
          s.housing_stress = treat;
        } else if (e >= -2) {
          s.hardship = s.nonhousing = history[static_cast<std::size_t>(e + 2)];
        }
        return s;
      };
      auto shift = [&](int year) {
        if (!treat) return 0.0;
        return cfg.group_gap + cfg.pre_trend_slope * static_cast<double>(year - event_year + 2);
      };
      gen.emit(b, id, t, start, event_year, state_of, shift);
    }
  }

  SimulatedPanel out;
  out.truth = std::move(b.truth);
  out.truth.tau = cfg.tau;
  out.truth.theta = cfg.theta;
  out.data = b.finish(cfg.years);
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

const McEstimand& McReport::estimand(std::string_view name) const {
  for (const auto& e : estimands) {
    if (e.name == name) return e;
  }
  throw InputError("unknown estimand '" + std::string(name) + "'");
}

namespace {

struct Draw {
  double estimate, se, p, df;
};

void summarize(McEstimand& e) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0, covered = 0, r10 = 0, r05 = 0, r01 = 0;
  double sum = 0.0, sum_se = 0.0;
  for (std::size_t r = 0; r < e.estimates.size(); ++r) {
    if (!std::isfinite(e.estimates[r])) continue;
    ++n;
    sum += e.estimates[r];
    sum_se += e.std_errors[r];
    const double crit = boost::math::quantile(boost::math::students_t(std::max(1.0, e.df[r])), 0.975);
    if (std::abs(e.estimates[r] - e.truth) <= crit * e.std_errors[r]) ++covered;
    const double p = e.p_values[r];
    r10 += p < 0.10;
    r05 += p < 0.05;
    r01 += p < 0.01;
  }
  if (n == 0) {
    e.bias = e.empirical_sd = e.mean_se = e.coverage95 = e.reject10 = e.reject05 = e.reject01 = nan;
    return;
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : e.estimates) {
    if (std::isfinite(v)) ss += (v - mean) * (v - mean);
  }
  const auto dn = static_cast<double>(n);
  e.bias = mean - e.truth;
  e.empirical_sd = n > 1 ? std::sqrt(ss / (dn - 1.0)) : nan;
  e.mean_se = sum_se / dn;
  e.coverage95 = static_cast<double>(covered) / dn;
  e.reject10 = static_cast<double>(r10) / dn;
  e.reject05 = static_cast<double>(r05) / dn;
  e.reject01 = static_cast<double>(r01) / dn;
}

Draw from_fit(const FitResultd& fit, const std::string& label) {
  const auto j = fit.require(label);
  const double est = fit.beta[j], se = fit.se[j];
  const double p = se > 0 ? two_sided_t_pvalue(est / se, static_cast<double>(fit.reference_df))
                          : std::numeric_limits<double>::quiet_NaN();
  return {est, se, p, static_cast<double>(fit.reference_df)};
}

std::vector<Draw> run_rep(const DgpConfig& cfg, McPipeline pipeline) {
  const auto sim = generate_panel(cfg);
  const auto derived = derive_variables(sim.data).data;
  if (pipeline == McPipeline::Did) {
    const auto columns = default_analysis_columns();
    auto subsamples = build_subsamples(derived, cfg.tenure, columns);
    const auto& ms = subsamples[static_cast<std::size_t>(cfg.subgroup)];
    const auto r = fit_did(ms);
    return {from_fit(r.fit, did_terms::kTreatPost), from_fit(r.fit, did_terms::kTreatPre)};
  }
  const auto tenure_name = std::string(to_string(cfg.tenure));
  const auto sample = subset(derived, [&](const ObservationRef& o) {
    auto t = o.category(cols::kTenure);
    return t && *t == tenure_name;
  });
  std::vector<Draw> out;
  for (HardshipMode m : {HardshipMode::None, HardshipMode::Pooled}) {
    FeSpec spec;
    spec.hardship = m;
    out.push_back(from_fit(fit_twoway_fe(sample, spec).fit, std::string(cols::kHousingStress)));
  }
  return out;
}

}  // namespace

McReport monte_carlo(const DgpConfig& cfg, std::size_t reps, McPipeline pipeline) {
  if (reps < 1) throw InputError("Monte Carlo needs at least one rep");
  cfg.validate();
  McReport report;
  report.pipeline = pipeline;
  report.reps = reps;
  if (pipeline == McPipeline::Did) {
    report.estimands = {McEstimand{"tau", cfg.tau, {}, {}, {}, {}},
                        McEstimand{"gamma2", cfg.pre_trend_slope, {}, {}, {}, {}}};
  } else {
    report.estimands = {McEstimand{"tau_no_hardship", cfg.tau, {}, {}, {}, {}},
                        McEstimand{"tau_with_hardship", cfg.tau, {}, {}, {}, {}}};
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t r = 0; r < reps; ++r) {
    DgpConfig rep_cfg = cfg;
    rep_cfg.seed = stream_seed(cfg.seed, r);
    std::vector<Draw> draws;
    try {
      draws = run_rep(rep_cfg, pipeline);
    } catch (const std::exception& ex) {
      ++report.failures;
      if (report.failure_messages.size() < 10) {
        report.failure_messages.push_back("rep " + std::to_string(r) + ": " + ex.what());
      }
      draws.assign(report.estimands.size(), Draw{nan, nan, nan, nan});
    }
    for (std::size_t k = 0; k < report.estimands.size(); ++k) {
      auto& e = report.estimands[k];
      e.estimates.push_back(draws[k].estimate);
      e.std_errors.push_back(draws[k].se);
      e.p_values.push_back(draws[k].p);
      e.df.push_back(draws[k].df);
    }
  }
  for (auto& e : report.estimands) summarize(e);
  return report;
}

std::string format_mc_report(const McReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "Monte Carlo (%s): %zu reps, %zu failed\n",
                std::string(to_string(report.pipeline)).c_str(), report.reps, report.failures);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10s %9s %9s %9s %9s %9s %9s %9s %9s\n", "estimand", "truth", "bias",
                "emp.sd", "mean.se", "cover95", "rej10", "rej05", "rej01");
  out << buf;
  for (const auto& e : report.estimands) {
    std::snprintf(buf, sizeof buf, "%-10s %9.4f %9.4f %9.4f %9.4f %9.3f %9.3f %9.3f %9.3f\n", e.name.c_str(),
                  e.truth, e.bias, e.empirical_sd, e.mean_se, e.coverage95, e.reject10, e.reject05, e.reject01);
    out << buf;
  }
  for (const auto& m : report.failure_messages) out << "  " << m << "\n";
  return out.str();
}

}  // namespace hsdid
