#pragma once

// Derived analysis variables: hardship / housing-stress flags from the two
// money-shortage questions, SF-36 component summaries, equivalised income.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hsdid/panel.hpp"

namespace hsdid {

/// Standard column names shared by the simulator, the deriver and the estimators.
namespace cols {
inline constexpr std::string_view kPersonId = "person_id";
inline constexpr std::string_view kYear = "year";
inline constexpr std::string_view kTenure = "tenure";

// Money-shortage events (raw booleans) and the emergency-money response.
inline constexpr std::string_view kMissedHousing = "missed_housing_payment";
inline constexpr std::string_view kBills = "could_not_pay_bills";
inline constexpr std::string_view kPawned = "sold_pawned";
inline constexpr std::string_view kMeals = "went_without_meals";
inline constexpr std::string_view kHeating = "went_without_heating";
inline constexpr std::string_view kFriends = "help_friends_family";
inline constexpr std::string_view kWelfare = "help_welfare_org";
inline constexpr std::string_view kRaiseMoney = "raise_money";

// Derived flags.
inline constexpr std::string_view kCannotRaise = "cannot_raise_emergency";
inline constexpr std::string_view kHardship = "hardship";
inline constexpr std::string_view kHousingStress = "housing_stress";
inline constexpr std::string_view kNonHousingHardship = "nonhousing_hardship";

// Health.
inline constexpr std::array<std::string_view, 8> kSf36Scales{
    "sf36_pf", "sf36_rp", "sf36_bp", "sf36_gh", "sf36_vt", "sf36_sf", "sf36_re", "sf36_mh"};
inline constexpr std::string_view kMcs = "mcs";
inline constexpr std::string_view kPcs = "pcs";
inline constexpr std::string_view kPcsLag = "pcs_lag1";
inline constexpr std::string_view kMentalHealthScale = "mental_health_scale";

// Income and household.
inline constexpr std::string_view kIncome = "household_income";
inline constexpr std::string_view kAdults = "n_adults";
inline constexpr std::string_view kChildren = "n_children";
inline constexpr std::string_view kEqIncome = "eq_income";
inline constexpr std::string_view kLogEqIncome = "log_eq_income";

inline constexpr std::string_view kEmployment = "employment";
inline constexpr std::string_view kNeighbourhood = "neighbourhood";

/// The seven non-housing hardship indicators, in reporting order.
inline constexpr std::array<std::string_view, 7> kNonHousingIndicators{
    kBills, kPawned, kMeals, kHeating, kFriends, kWelfare, kCannotRaise};
}  // namespace cols

/// Catalogue of every column the toolkit knows, with its kind. Used to build
/// an ingestion schema from whichever of these a file carries.
const Schema& standard_schema();
Schema schema_for_header(std::span<const std::string> header);

/// Private renters and owners with a mortgage; other tenures are not analysed.
enum class Tenure { Renter, Owner };

Tenure parse_tenure(std::string_view s);
std::string_view to_string(Tenure t);
inline constexpr std::array<Tenure, 2> kTenures{Tenure::Renter, Tenure::Owner};

enum class RaiseMoney { Easily, WithSacrifices, Drastic, CannotRaise };

/// Accepts "easy" / "sacrifice" / "drastic" / "cannot" or the codes 1-4.
RaiseMoney parse_raise_money(std::string_view code);
std::string_view to_string(RaiseMoney r);

struct MoneyShortageEvents {
  bool missed_housing_payment = false;
  bool could_not_pay_bills = false;
  bool sold_pawned = false;
  bool went_without_meals = false;
  bool went_without_heating = false;
  bool help_friends_family = false;
  bool help_welfare_org = false;
};

struct HardshipProfile {
  bool missed_housing_payment = false;
  bool could_not_pay_bills = false;
  bool sold_pawned = false;
  bool went_without_meals = false;
  bool went_without_heating = false;
  bool help_friends_family = false;
  bool help_welfare_org = false;
  bool cannot_raise_emergency = false;
  bool hardship = false;
  bool housing_stress = false;

  /// Any hardship indicator other than the missed housing payment.
  bool nonhousing_hardship() const;
};

HardshipProfile classify_hardship(const MoneyShortageEvents& events, RaiseMoney response);

struct ScaleNorm {
  std::string scale;
  double mean = 0.0;
  double sd = 1.0;
  double pcs_weight = 0.0;
  double mcs_weight = 0.0;
};

/// Population means, SDs and component weights for the eight SF-36 scales in
/// the order physical function, role-physical, bodily pain, general health,
/// vitality, social function, role-emotional, mental health.
class PopulationNorms {
 public:
  static constexpr std::array<std::string_view, 8> kScaleNames{
      "physical_function", "role_physical",   "bodily_pain",    "general_health",
      "vitality",          "social_function", "role_emotional", "mental_health"};

  /// Australian 1995 National Health Survey values.
  static PopulationNorms australian_1995();
  /// CSV with columns scale,mean,sd,pcs_weight,mcs_weight; rows may be in any order.
  static PopulationNorms load_csv(const std::string& path);
  static PopulationNorms from_rows(std::vector<ScaleNorm> rows);

  std::span<const ScaleNorm, 8> scales() const { return scales_; }
  const ScaleNorm& operator[](std::size_t i) const { return scales_[i]; }
  std::string to_csv() const;

 private:
  std::array<ScaleNorm, 8> scales_;
};

struct ComponentSummaries {
  double pcs = 0.0;
  double mcs = 0.0;
};

/// Standardise each scale, weight, and map to mean 50 / SD 10.
ComponentSummaries compute_component_summaries(std::span<const double, 8> scores,
                                               std::span<const ScaleNorm, 8> norms);
ComponentSummaries compute_component_summaries(std::span<const double, 8> scores,
                                               const PopulationNorms& norms);

enum class OecdScale { Modified, Original };

OecdScale parse_oecd_scale(std::string_view s);
std::string_view to_string(OecdScale s);

double equivalise_income(double household_disposable_income, int n_adults, int n_children,
                         OecdScale scale = OecdScale::Modified);

double log_income(double equivalised_income, double floor = 1000.0);

/// One indicator per non-baseline level, in `levels` order.
Eigen::VectorXd categorical_dummies(std::string_view value, std::string_view baseline,
                                    std::span<const std::string> levels);

struct DeriveConfig {
  PopulationNorms norms = PopulationNorms::australian_1995();
  OecdScale oecd_scale = OecdScale::Modified;
  double income_floor = 1000.0;
};

struct DeriveReport {
  std::size_t rows = 0;
  std::size_t hardship_rows = 0;
  std::size_t housing_stress_rows = 0;
  std::size_t hardship_missing_rows = 0;
  std::size_t component_summaries_computed = 0;
  std::size_t negative_income_rows = 0;
  std::size_t nesting_violations = 0;
};

struct DeriveResult {
  PanelDataset data;
  DeriveReport report;
};

/// Adds hardship flags, component summaries (when SF-36 scale columns exist),
/// the mental-health scale, equivalised and log income and the lagged PCS.
/// Missing inputs give missing outputs; rows are never dropped here.
DeriveResult derive_variables(const PanelDataset& ds, const DeriveConfig& cfg = {});

/// Number of rows with housing stress but no hardship (always zero for derived data).
std::size_t count_nesting_violations(const PanelDataset& ds);

}  // namespace hsdid
